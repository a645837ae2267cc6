// sfi-lee: equivariance metrics and SDR degradation experiments.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include "sfi_lee/config.hpp"
#include "sfi_lee/experiment.hpp"
#include "sfi_lee/report.hpp"
#include "sfi_lee/resampler.hpp"
#include "sfi_lee/wav.hpp"
#include "sfi_lee/weights.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

void print_correlations(const sfi::Report& rep) {
    for (const auto& c : rep.correlations) {
        std::cout << "rho(" << c.x << ", " << c.y << ")";
        if (c.test_rate > 0.0) std::cout << " @ " << c.test_rate << " Hz";
        std::cout << " = " << sfi::format_number(c.rho) << " over " << c.points << " points\n";
    }
}

void finish(const sfi::Report& rep, const std::string& dir) {
    for (const auto& p : sfi::emit_report(rep, dir)) std::cout << "wrote " << p << "\n";
    if (!rep.skipped_tracks.empty()) std::cout << rep.skipped_tracks.size() << " short track(s) skipped\n";
    print_correlations(rep);
}

sfi::Model load_model(const sfi::ExperimentConfig& cfg, const std::string& weights_path) {
    sfi::WeightBundle w = sfi::load_weights(weights_path);
    return sfi::Model(cfg.model, std::move(w));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampling-frequency equivariance metrics for encoder/mask/decoder separation models"};
    app.require_subcommand(1);

    std::string in_path, out_path, config_path, weights_path, lambdas;
    double rate = 0.0;
    int window = 24;
    std::uint64_t seed = 0;

    auto* resample = app.add_subcommand("resample", "Resample a WAV file with the windowed-sinc kernel");
    resample->add_option("input", in_path, "input WAV")->required();
    resample->add_option("output", out_path, "output WAV (32-bit float)")->required();
    resample->add_option("--rate", rate, "target rate in Hz")->required();
    resample->add_option("--window", window, "kernel support L");

    auto* init = app.add_subcommand("init", "Write seeded initial weights for the configured model");
    init->add_option("--config", config_path)->required();
    init->add_option("--seed", seed);
    init->add_option("--out", out_path, "weight file")->required();

    auto* metrics = app.add_subcommand("metrics", "Compute all metrics of one model at its trained rate");
    metrics->add_option("--config", config_path)->required();
    metrics->add_option("--weights", weights_path)->required();
    metrics->add_option("--out", out_path, "report directory (default: output_dir)");

    auto* sweep = app.add_subcommand("sweep", "Sigma-init sweep over seeds");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--out", out_path, "report directory (default: output_dir)");

    auto* knob = app.add_subcommand("knob", "Mask perturbation experiment");
    knob->add_option("--config", config_path)->required();
    knob->add_option("--lambdas", lambdas, "comma-separated lambda grid (default: knob.lambdas)");
    knob->add_option("--out", out_path, "report directory (default: output_dir)");

    auto* eval = app.add_subcommand("eval", "Mean SI-SDR of one model at a rate");
    eval->add_option("--config", config_path)->required();
    eval->add_option("--weights", weights_path)->required();
    eval->add_option("--rate", rate)->required();

    auto* report = app.add_subcommand("report", "Re-emit plots and JSON from a rows CSV");
    report->add_option("--in", in_path, "rows.csv")->required();
    report->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*resample) {
            sfi::WindowSpec w;
            w.support = window;
            w.validate();
            const sfi::Signal x = sfi::read_wav(in_path);
            sfi::write_wav(out_path, sfi::resample_to_rate(x, rate, w));
        } else if (*init) {
            const auto cfg = sfi::load_config(config_path);
            sfi::save_weights(out_path, sfi::init_weights(cfg.model, seed));
            std::cout << "wrote " << out_path << "\n";
        } else if (*metrics) {
            const auto cfg = sfi::load_config(config_path);
            const auto rep = sfi::run_metrics(cfg, load_model(cfg, weights_path));
            for (const auto& r : rep.rows) std::cout << r.metric << " = " << sfi::format_number(r.value) << "\n";
            finish(rep, out_path.empty() ? cfg.output_dir : out_path);
        } else if (*sweep) {
            const auto cfg = sfi::load_config(config_path);
            finish(sfi::run_sigma_sweep(cfg), out_path.empty() ? cfg.output_dir : out_path);
        } else if (*knob) {
            auto cfg = sfi::load_config(config_path);
            if (!lambdas.empty()) cfg.lambdas = sfi::parse_number_list(lambdas);
            cfg.validate();
            finish(sfi::run_perturbation_knob(cfg), out_path.empty() ? cfg.output_dir : out_path);
        } else if (*eval) {
            const auto cfg = sfi::load_config(config_path);
            const sfi::Model m = load_model(cfg, weights_path);
            const double sdr = sfi::evaluate_at_sf(m, sfi::load_segments(cfg, rate), rate);
            std::cout << "si_sdr_db = " << sfi::format_number(sdr) << "\n";
        } else if (*report) {
            sfi::Report rep;
            rep.rows = sfi::read_csv(in_path);
            if (rep.rows.empty()) throw sfi::DataError("'" + in_path + "' has no rows");
            rep.experiment = rep.rows.front().experiment;
            for (const auto& p : sfi::emit_report(rep, out_path)) std::cout << "wrote " << p << "\n";
        }
    } catch (const sfi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const sfi::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const sfi::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    }
    return kOk;
}
