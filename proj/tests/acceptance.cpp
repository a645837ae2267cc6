// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "sfi_lee/config.hpp"
#include "sfi_lee/eval.hpp"
#include "sfi_lee/experiment.hpp"
#include "sfi_lee/lie.hpp"
#include "sfi_lee/metrics.hpp"
#include "sfi_lee/report.hpp"
#include "sfi_lee/resampler.hpp"

#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace sfi;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double fs32 = 32000.0;
constexpr double kFloor = -6.0;       // LLN-LEE and Mask-LN-LEE, unit masks
constexpr double kDeltaFloor = 1e-9;  // |dLN-LEE|, unit masks

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [fail: " << what << "]";
        }
    }
};

double max_diff(const Matrix& a, const Matrix& b) { return oracle::max_abs_diff(a.data, b.data); }

Tensor tapered(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor x(1, n, fs32);
    for (int k = 0; k < 12; ++k) {
        const double f = u(rng) * 0.3 * fs32, ph = u(rng) * 2 * pi, a = u(rng);
        for (std::size_t i = 0; i < n; ++i) x.data[i] += a * std::sin(2 * pi * f * static_cast<double>(i) / fs32 + ph);
    }
    for (std::size_t i = 0; i < n; ++i) x.data[i] *= 0.5 - 0.5 * std::cos(2 * pi * static_cast<double>(i) / (n - 1));
    return x;
}

std::vector<Tensor> segments(std::size_t count, std::size_t n, std::uint64_t seed) {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(tapered(n, seed * 1000 + i));
    return out;
}

ModelSpec toy_spec() {
    ModelSpec s;
    s.id = "toy";
    s.encoder.channels = 8;
    s.encoder.kernel = 16;
    s.encoder.hop = 8;
    s.mask.hidden = 8;
    s.sigma_init = 2 * pi * 200.0;
    return s;
}

ModelSpec linear_spec() {
    ModelSpec s = toy_spec();
    s.id = "toy-linear";
    s.encoder.filter_source = FilterSource::Learned;
    s.mask.kind = MaskKind::Linear;
    return s;
}

Matrix fd_of_s(double r, std::size_t n, double fs, const WindowSpec& w) {
    const Matrix p = build_matrix(ResampleAction::pinned(r, fs, w, n, n));
    const Matrix m = build_matrix(ResampleAction::pinned(-r, fs, w, n, n));
    Matrix d(n, n);
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = (p.data[i] - m.data[i]) / (2 * r);
    return d;
}

// 1. S(0) is the identity.
void resampler_identity(Outcome& o) {
    double worst = 0.0;
    for (std::size_t n : {16, 160, 1600}) {
        const Matrix s = build_matrix(ResampleAction::make(0.0, 16000, {}, n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(s(i, j) - (i == j ? 1.0 : 0.0)));
        }
    }
    o.detail << "max |S(0) - I| = " << worst;
    o.check(worst <= 1e-12, "identity");
}

// 2. 440 Hz tone at r = ln 1.5.
void bandlimited_accuracy(Outcome& o) {
    const double f = 440.0;
    const std::size_t n = 3200;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * pi * f * static_cast<double>(i) / fs32);
    const auto y = sfi::apply(ResampleAction::make(std::log(1.5), fs32, {}, n), x);
    double err = 0.0;
    for (std::size_t m = 18; m + 18 < y.size(); ++m) {
        err = std::max(err, std::abs(y[m] - std::sin(2 * pi * f * static_cast<double>(m) / (1.5 * fs32))));
    }
    o.detail << "interior max error = " << err;
    o.check(err <= 1e-3, "tone error");
}

// 3. Generator matrix against central differences of S.
void derivative_matrix(Outcome& o) {
    const WindowSpec w;
    const Matrix d = build_derivative_matrix(64, 8000, w);
    const double e5 = max_diff(d, fd_of_s(1e-5, 64, 8000, w));
    o.detail << "(a) |D - FD(S)|max at r=1e-5, N=64: " << e5;
    o.check(e5 <= 1e-6, "3a: FD at r=1e-5 above 1e-6");

    std::vector<double> lr, le;
    for (double r : {1e-2, 1e-3, 1e-4}) {
        lr.push_back(std::log10(r));
        le.push_back(std::log10(max_diff(d, fd_of_s(r, 64, 8000, w))));
    }
    const double slope = least_squares(lr, le).slope;
    o.detail << "; (b) convergence slope " << slope;
    o.check(std::abs(slope - 2.0) <= 0.2, "3b: slope");
}

// 4. Random dense linear probes against (M D_in - D_out M) x.
void linear_closed_form(Outcome& o) {
    LieOptions fd;
    fd.estimator = Estimator::CentralFD;
    fd.r_step = 1e-4;
    fd.richardson = true;
    LieOptions lin;
    lin.estimator = Estimator::Linearized;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(16, 64);
    double worst_fd = 0.0, worst_lin = 0.0;
    for (int k = 0; k < 20; ++k) {
        const std::size_t rows = size(rng), cols = size(rng);
        Matrix m(rows, cols);
        m.data = oracle::gaussian_vector(rows * cols, 500 + k);
        for (auto& v : m.data) v /= std::sqrt(static_cast<double>(cols));
        ProbeMap f;
        f.name = "dense";
        f.fn = [m](const Tensor& x) {
            Tensor y(1, m.rows, x.rate);
            y.data = matvec(m, x.data);
            return y;
        };
        f.linear = true;
        Tensor x(1, cols, fs32);
        x.data = oracle::gaussian_vector(cols, 900 + k);

        const Matrix din = oracle::dense_derivative(cols, 24), dout = oracle::dense_derivative(rows, 24);
        const auto a = oracle::dense_apply(m, oracle::dense_apply(din, x.data));
        const auto b = oracle::dense_apply(dout, oracle::dense_apply(m, x.data));
        std::vector<double> expect(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) expect[i] = a[i] - b[i];

        worst_fd = std::max(worst_fd, oracle::rel_err(lie_fd(f, x, fd).vector.data, expect));
        worst_lin = std::max(worst_lin, oracle::rel_err(lie_linearized(f, x, lin).vector.data, expect));
    }
    o.detail << "worst relative error: fd " << worst_fd << ", linearized " << worst_lin;
    o.check(worst_fd <= 1e-4, "fd");
    o.check(worst_lin <= 1e-4, "linearized");
}

// 5. Chain-rule residual.
void chain_rule(Outcome& o) {
    LieOptions fd;
    fd.estimator = Estimator::CentralFD;
    fd.r_step = 1e-6;
    const Model lin(linear_spec(), init_weights(linear_spec(), 4));
    const Model toy(toy_spec(), init_weights(toy_spec(), 4));
    const auto pl = make_probes(lin), pt = make_probes(toy);
    double worst_lin = 0.0, worst_toy = 0.0, worst_toy_fd = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Tensor x = tapered(512, seed);
        worst_lin = std::max(worst_lin, lie_chain_terms(pl, x).residual);
        worst_toy = std::max(worst_toy, lie_chain_terms(pt, x).residual);
        worst_toy_fd = std::max(worst_toy_fd, lie_chain_terms(pt, x, fd).residual);
    }
    o.detail << "linear " << worst_lin << ", nonlinear " << worst_toy << " (fd " << worst_toy_fd << ")";
    o.check(worst_lin <= 1e-6, "linear");
    o.check(worst_toy <= 0.05, "nonlinear");
    o.check(worst_toy_fd <= 0.05, "nonlinear fd");
}

// 6. Scale invariance and the decoder-gain shift.
void scale_invariance(Outcome& o) {
    const ModelSpec s = toy_spec();
    const Model m(s, init_weights(s, 6));
    ModelProbes p = make_probes(m);
    const auto segs = segments(3, 640, 1);

    const MetricResult ln = ln_lee(p.full, segs), ln10 = ln_lee(scaled(p.full, 10.0), segs);
    const MetricResult mk = mask_ln_lee(p, segs);
    ModelProbes p10 = p;
    p10.mask = scaled(p.mask, 10.0);
    const MetricResult mk10 = mask_ln_lee(p10, segs);
    double worst = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        worst = std::max(worst, std::abs(ln.per_segment[i] - ln10.per_segment[i]));
        worst = std::max(worst, std::abs(mk.per_segment[i] - mk10.per_segment[i]));
    }

    WeightBundle w = init_weights(s, 6);
    w.get("decoder.gain").values[0] *= 10.0f;
    const auto pg = make_probes(Model(s, w));
    const double shift = lln_lee(pg, segs).aggregate - lln_lee(p, segs).aggregate;
    o.detail << "max per-segment change " << worst << ", LLN-LEE shift " << shift;
    o.check(worst <= 1e-9, "rescaling");
    o.check(std::abs(shift - 1.0) <= 1e-6, "decoder shift");
}

// 7. Unit masks sit at the floor.
void equivariance_floor(Outcome& o) {
    const ModelSpec s = toy_spec();
    WeightBundle w = init_weights(s, 3);
    force_unit_masks(w, s);
    const auto p = make_probes(Model(s, w));
    const auto segs = segments(3, 2048, 0);
    const double lln = lln_lee(p, segs).aggregate;
    const double msk = mask_ln_lee(p, segs).aggregate;
    const double dln = delta_ln_lee(p, segs).aggregate;
    o.detail << "LLN-LEE " << lln << ", Mask-LN-LEE " << msk << " (floor " << kFloor << "), dLN-LEE " << dln
             << " (floor |.| <= " << kDeltaFloor << ")";
    o.check(lln <= kFloor, "LLN-LEE");
    o.check(msk <= kFloor, "Mask-LN-LEE");
    o.check(std::abs(dln) <= kDeltaFloor, "dLN-LEE");
}

// 8. Layer-wise upper and lower bounds on the zoo.
void layerwise_bounds(Outcome& o) {
    double worst_upper = HUGE_VAL, worst_lower = HUGE_VAL, worst_no_mask = HUGE_VAL;
    std::size_t count = 0;
    for (const auto& spec : model_zoo()) {
        const Model m(spec, init_weights(spec, 3));
        for (const auto& b : layerwise_bound_terms(make_probes(m), segments(10, 1024, 5))) {
            worst_upper = std::min(worst_upper, b.upper_slack() / b.total);
            worst_lower = std::min(worst_lower, b.lower_slack() / b.total);
            if (spec.mask.kind == MaskKind::TCN) worst_no_mask = std::min(worst_no_mask, b.no_mask_lower_slack() / b.total);
            ++count;
        }
    }
    o.detail << count << " segment-model pairs; worst relative slack: upper " << worst_upper << ", lower "
             << worst_lower << " (mask-free stand-in " << worst_no_mask << ")";
    o.check(worst_upper >= -0.05, "upper");
    o.check(worst_lower >= -0.05, "lower");
}

// 9. Perturbation knob.
void perturbation_knob(Outcome& o) {
    ExperimentConfig c;
    c.experiment_id = "knob";
    c.model.id = "band-split";
    c.model.encoder.channels = 16;
    c.model.encoder.kernel = 32;
    c.model.encoder.hop = 16;
    c.model.mask.hidden = 8;
    c.model.mask.init = MaskInit::BandSplit;
    c.model.mask.weight_scale = 0.1;
    c.model.sigma_init = 400 * pi;
    c.scenes = 8;
    c.knob_seed = 0;
    c.lambdas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    const Report rep = run_perturbation_knob(c);
    for (const auto& cr : rep.correlations) {
        const bool vs_lambda = cr.x == "lambda";
        if (cr.x == "LN-LEE" || cr.y == "LN-LEE") {
            o.detail << "(" << cr.x << "," << cr.y << (vs_lambda ? "" : " @" + format_number(cr.test_rate)) << ")="
                     << cr.rho << " ";
            continue;
        }
        if (!vs_lambda && cr.test_rate != 16000.0) {
            o.detail << "(" << cr.x << ",deg @8000)=" << cr.rho << " ";
            continue;
        }
        const double need = vs_lambda ? 0.9 : 0.7;
        const std::string name = vs_lambda ? "lambda vs " + cr.y : cr.x + " vs degradation @16000";
        o.detail << "(" << (vs_lambda ? cr.y : cr.x + ",deg @16000") << ")=" << cr.rho << " ";
        o.check(std::isfinite(cr.rho) && cr.rho >= need, name);
    }
}

// 10. SI-SDR and Pearson examples.
void eval_examples(Outcome& o) {
    const Signal s{{0.3, -1.0, 2.0, 0.5}, 8000.0};
    const Signal s2{{0.6, -2.0, 4.0, 1.0}, 8000.0};
    o.check(si_sdr(EvalPair{s, s}) == kSdrCap, "identity cap");
    o.check(si_sdr(EvalPair{s2, s}) == kSdrCap, "2x cap");
    o.check(si_sdr(EvalPair{Signal{{1.0, 1.0}, 8000.0}, Signal{{1.0, 0.0}, 8000.0}}) == 0.0, "orthogonal");
    const std::vector<double> xs{1, 2, 3, 4, 5.5};
    std::vector<double> ys, neg;
    for (double x : xs) {
        ys.push_back(2 * x + 1);
        neg.push_back(-x);
    }
    o.check(std::abs(pearson(xs, ys) - 1.0) <= 1e-12, "affine");
    o.check(std::abs(pearson(xs, neg) + 1.0) <= 1e-12, "negation");
    o.check(std::abs(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) - 0.5) <= 1e-15, "0.5");
    bool threw = false;
    try {
        pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
    } catch (const DataError&) {
        threw = true;
    }
    o.check(threw, "degenerate variance");
    o.check(make_degradation("m", 1.0, 0, 32000.0, 3.3, 3.3).degradation == 0.0, "trained rate");
    o.detail << "cap, scale, orthogonal, pearson values, degenerate error, zero degradation";
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 11. Two sweeps through the CLI.
void determinism(Outcome& o) {
    const fs::path dir = fs::temp_directory_path() / "sfi_lee_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "sweep.cfg";
    std::ofstream(cfg) << "experiment = determinism\n"
                          "model.channels = 8\n"
                          "model.kernel = 16\n"
                          "model.hop = 8\n"
                          "model.hidden = 8\n"
                          "model.mask_init = band_split\n"
                          "sigma_grid = 10pi:100pi:10pi\n"
                          "seeds = 4\n"
                          "segment_seconds = 0.1\n"
                          "dataset.duration = 0.1\n"
                          "dataset.scenes = 2\n";
    std::string csv[2];
    for (int k = 0; k < 2; ++k) {
        const fs::path out = dir / ("run" + std::to_string(k));
        const std::string cmd = std::string(SFI_LEE_CLI) + " sweep --config " + cfg.string() + " --out " + out.string() +
                                " >" + (dir / "log.txt").string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        o.check(WIFEXITED(status) && WEXITSTATUS(status) == 0, "sweep exit status");
        csv[k] = read_all(out / "rows.csv");
    }
    o.detail << "rows.csv " << csv[0].size() << " bytes";
    o.check(!csv[0].empty(), "empty csv");
    o.check(csv[0] == csv[1], "csv bytes differ");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"resampler identity", resampler_identity},
        {"bandlimited accuracy", bandlimited_accuracy},
        {"derivative matrix", derivative_matrix},
        {"linear closed form", linear_closed_form},
        {"chain-rule decomposition", chain_rule},
        {"scale invariance", scale_invariance},
        {"equivariance floor", equivariance_floor},
        {"layer-wise bounds", layerwise_bounds},
        {"perturbation knob", perturbation_knob},
        {"si-sdr and pearson", eval_examples},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("%s %2zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
