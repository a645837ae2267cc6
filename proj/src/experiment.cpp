#include "sfi_lee/experiment.hpp"

#include "sfi_lee/parallel.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace sfi {

namespace {

struct ModelOutcome {
    std::vector<double> metrics;                    // reported_metrics() order, trained rate
    std::vector<std::vector<double>> test_metrics;  // [rate][metric], when requested
    std::vector<double> degradation;                // per test rate
};

struct Inputs {
    SegmentSet trained;
    std::vector<SegmentSet> test;
};

Inputs load_inputs(const ExperimentConfig& cfg) {
    Inputs in;
    in.trained = load_segments(cfg, cfg.model.trained_rate);
    for (double r : cfg.test_rates) in.test.push_back(load_segments(cfg, r));
    return in;
}

std::vector<double> metric_values(const Model& m, const SegmentSet& segs, const ExperimentConfig& cfg) {
    const ModelProbes probes = make_probes(m, cfg.window);
    const std::vector<Tensor> xs = mixture_tensors(segs);
    std::vector<double> out;
    for (MetricKind k : reported_metrics()) out.push_back(compute_metric(k, probes, xs, cfg.lie).aggregate);
    return out;
}

ModelOutcome evaluate_model(const Model& m, const ExperimentConfig& cfg, const Inputs& in) {
    ModelOutcome o;
    o.metrics = metric_values(m, in.trained, cfg);
    const double trained = cfg.model.trained_rate;
    const double sdr_trained = evaluate_at_sf(m, in.trained, trained);
    for (std::size_t i = 0; i < cfg.test_rates.size(); ++i) {
        const double rate = cfg.test_rates[i];
        const double sdr = rate == trained ? sdr_trained : evaluate_at_sf(m, in.test[i], rate);
        o.degradation.push_back(sdr_trained - sdr);
        if (cfg.metrics_at_test_rates) {
            o.test_metrics.push_back(metric_values(m.at_rate(rate), in.test[i], cfg));
        }
    }
    return o;
}

template <typename Fn>
auto with_context(const std::string& where, Fn fn) {
    try {
        return fn();
    } catch (const NumericalError& e) {
        throw NumericalError(where + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

void append_rows(Report& rep, const ExperimentConfig& cfg, const ModelOutcome& o, double sigma, double lambda,
                 std::int64_t seed) {
    const auto& kinds = reported_metrics();
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        for (std::size_t i = 0; i < cfg.test_rates.size(); ++i) {
            ReportRow r;
            r.experiment = rep.experiment;
            r.model = cfg.model.id;
            r.sigma_init = sigma;
            r.lambda = lambda;
            r.seed = seed;
            r.metric = to_string(kinds[k]);
            r.metric_rate = cfg.model.trained_rate;
            r.value = o.metrics[k];
            r.test_rate = cfg.test_rates[i];
            r.degradation_db = o.degradation[i];
            rep.rows.push_back(r);
            if (cfg.metrics_at_test_rates) {
                r.metric_rate = cfg.test_rates[i];
                r.value = o.test_metrics[i][k];
                rep.rows.push_back(r);
            }
        }
    }
}

std::vector<ReportRow> seed_averages(const std::vector<ReportRow>& rows) {
    using Key = std::tuple<double, double, std::string, double, double>;
    std::map<Key, std::size_t> index;
    std::vector<ReportRow> out;
    std::vector<std::size_t> counts;
    for (const auto& r : rows) {
        const Key key{r.sigma_init, r.lambda, r.metric, r.metric_rate, r.test_rate};
        auto [it, fresh] = index.emplace(key, out.size());
        if (fresh) {
            ReportRow a = r;
            a.seed = -1;
            a.averaged = true;
            a.value = 0.0;
            a.degradation_db = 0.0;
            out.push_back(a);
            counts.push_back(0);
        }
        out[it->second].value += r.value;
        out[it->second].degradation_db += r.degradation_db;
        ++counts[it->second];
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].value /= static_cast<double>(counts[i]);
        out[i].degradation_db /= static_cast<double>(counts[i]);
    }
    return out;
}

Correlation correlate(std::string x, std::string y, double metric_rate, double test_rate,
                      const std::vector<double>& xs, const std::vector<double>& ys) {
    Correlation c;
    c.x = std::move(x);
    c.y = std::move(y);
    c.metric_rate = metric_rate;
    c.test_rate = test_rate;
    c.points = xs.size();
    try {
        c.rho = pearson(xs, ys);
    } catch (const DataError& e) {
        c.rho = std::numeric_limits<double>::quiet_NaN();
        c.note = e.what();
        std::cerr << "warning: correlation " << c.x << " vs " << c.y << " at " << test_rate << " Hz undefined: " << e.what()
                  << "\n";
    }
    return c;
}

std::vector<double> metric_rates(const ExperimentConfig& cfg) {
    std::vector<double> rates{cfg.model.trained_rate};
    if (cfg.metrics_at_test_rates) {
        for (double r : cfg.test_rates) rates.push_back(r);
    }
    return rates;
}

// metric vs degradation over the selected rows, per (metric, metric rate, test rate).
void metric_degradation_correlations(Report& rep, const ExperimentConfig& cfg, const std::vector<ReportRow>& rows) {
    for (MetricKind k : reported_metrics()) {
        const std::string name = to_string(k);
        for (double mr : metric_rates(cfg)) {
            for (double tr : cfg.test_rates) {
                if (mr != cfg.model.trained_rate && mr != tr) continue;
                std::vector<double> xs, ys;
                for (const auto& r : rows) {
                    if (r.metric == name && r.metric_rate == mr && r.test_rate == tr) {
                        xs.push_back(r.value);
                        ys.push_back(r.degradation_db);
                    }
                }
                rep.correlations.push_back(correlate(name, "degradation", mr, tr, xs, ys));
            }
        }
    }
}

}  // namespace

const std::vector<MetricKind>& reported_metrics() {
    static const std::vector<MetricKind> kinds{MetricKind::LNLEE, MetricKind::LLNLEE, MetricKind::DeltaLNLEE,
                                               MetricKind::MaskLNLEE};
    return kinds;
}

SegmentSet load_segments(const ExperimentConfig& cfg, double rate) {
    Dataset ds;
    if (cfg.dataset_dir.empty()) {
        SyntheticSceneSpec spec = cfg.synthetic;
        spec.rate = rate;
        ds = make_synthetic_dataset(spec, cfg.scenes);
    } else {
        ds = load_directory_dataset(cfg.dataset_dir);
        if (ds.rate != rate) ds = dataset_at_rate(ds, rate);
    }
    return extract_segments(ds, cfg.segment_seconds);
}

Report run_sigma_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.model.sfi()) throw ConfigError("the sigma sweep needs an MGF (SFI) model");
    const Inputs in = load_inputs(cfg);
    const std::size_t n = cfg.sigma_grid.size() * cfg.seeds;
    const auto outcomes = parallel_map(n, [&](std::size_t t) {
        const double sigma = cfg.sigma_grid[t / cfg.seeds];
        const std::uint64_t seed = t % cfg.seeds;
        std::ostringstream where;
        where << "sigma_init=" << sigma << " seed=" << seed;
        return with_context(where.str(), [&] {
            ModelSpec spec = cfg.model;
            spec.sigma_init = sigma;
            const Model m(spec, init_weights(spec, seed));
            return evaluate_model(m, cfg, in);
        });
    });

    Report rep;
    rep.experiment = cfg.experiment_id;
    rep.skipped_tracks = in.trained.skipped;
    for (std::size_t t = 0; t < n; ++t) {
        append_rows(rep, cfg, outcomes[t], cfg.sigma_grid[t / cfg.seeds], 0.0, static_cast<std::int64_t>(t % cfg.seeds));
    }
    const std::vector<ReportRow> averaged = seed_averages(rep.rows);
    rep.rows.insert(rep.rows.end(), averaged.begin(), averaged.end());
    metric_degradation_correlations(rep, cfg, averaged);
    return rep;
}

Report run_perturbation_knob(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.lambdas.empty()) throw ConfigError("knob.lambdas is empty");
    const Inputs in = load_inputs(cfg);
    const Model base(cfg.model, init_weights(cfg.model, cfg.knob_seed));
    const auto outcomes = parallel_map(cfg.lambdas.size(), [&](std::size_t i) {
        std::ostringstream where;
        where << "lambda=" << cfg.lambdas[i] << " seed=" << cfg.knob_seed;
        return with_context(where.str(), [&] {
            Model m = base;
            m.set_perturbation({cfg.lambdas[i], cfg.period_frames});
            return evaluate_model(m, cfg, in);
        });
    });

    Report rep;
    rep.experiment = cfg.experiment_id;
    rep.skipped_tracks = in.trained.skipped;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        append_rows(rep, cfg, outcomes[i], cfg.model.sigma_init, cfg.lambdas[i],
                    static_cast<std::int64_t>(cfg.knob_seed));
    }
    const auto& kinds = reported_metrics();
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        std::vector<double> ys;
        for (const auto& o : outcomes) ys.push_back(o.metrics[k]);
        rep.correlations.push_back(correlate("lambda", to_string(kinds[k]), cfg.model.trained_rate, 0.0, cfg.lambdas, ys));
    }
    metric_degradation_correlations(rep, cfg, rep.rows);
    return rep;
}

Report run_metrics(const ExperimentConfig& cfg, const Model& model) {
    const SegmentSet segs = load_segments(cfg, model.rate());
    const ModelProbes probes = make_probes(model, cfg.window);
    const std::vector<Tensor> xs = mixture_tensors(segs);
    Report rep;
    rep.experiment = cfg.experiment_id;
    rep.skipped_tracks = segs.skipped;
    for (MetricKind k : {MetricKind::LEE, MetricKind::LNLEE, MetricKind::LLNLEE, MetricKind::DeltaLNLEE,
                         MetricKind::MaskLNLEE}) {
        ReportRow r;
        r.experiment = rep.experiment;
        r.model = model.spec().id;
        r.sigma_init = model.spec().sigma_init;
        r.lambda = model.perturbation().lambda;
        r.seed = static_cast<std::int64_t>(model.weights().seed);
        r.metric = to_string(k);
        r.metric_rate = model.rate();
        r.value = compute_metric(k, probes, xs, cfg.lie).aggregate;
        r.test_rate = model.rate();
        rep.rows.push_back(r);
    }
    return rep;
}

}  // namespace sfi
