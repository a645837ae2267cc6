#include "sfi_lee/eval.hpp"

#include "sfi_lee/parallel.hpp"
#include "sfi_lee/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace sfi {

double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
    if (estimate.size() != reference.size()) {
        throw DataError("si_sdr: estimate and reference lengths differ");
    }
    double ss = 0.0;
    double es = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        ss += reference[i] * reference[i];
        es += estimate[i] * reference[i];
    }
    if (!(ss > 0.0)) throw DataError("si_sdr: reference is identically zero");
    const double alpha = es / ss;
    double target = 0.0;
    double residual = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double t = alpha * reference[i];
        const double e = t - estimate[i];
        target += t * t;
        residual += e * e;
    }
    if (residual == 0.0) return kSdrCap;
    if (target == 0.0) return -kSdrCap;
    return std::min(kSdrCap, 10.0 * std::log10(target / residual));
}

double si_sdr(const EvalPair& pair) {
    if (pair.estimate.sample_rate != pair.reference.sample_rate) {
        throw DataError("si_sdr: estimate and reference rates differ");
    }
    return si_sdr(pair.estimate.samples, pair.reference.samples);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DataError("pearson: input lengths differ");
    if (xs.size() < 2) throw DataError("pearson: need at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw DataError("least_squares: need two or more paired points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (!(sxx > 0.0)) throw DataError("least_squares: x values are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

DegradationRow make_degradation(std::string model_id, double sigma_init, std::uint64_t seed, double test_rate,
                                double sdr_trained, double sdr_test) {
    DegradationRow r;
    r.model_id = std::move(model_id);
    r.sigma_init = sigma_init;
    r.seed = seed;
    r.test_rate = test_rate;
    r.sdr_trained = sdr_trained;
    r.sdr_test = sdr_test;
    r.degradation = sdr_trained - sdr_test;
    return r;
}

double evaluate_separator(const Separator& sep, const SegmentSet& segments) {
    if (segments.segments.empty()) throw DataError("evaluation needs at least one segment");
    const auto per_segment = parallel_map(segments.segments.size(), [&](std::size_t i) {
        const Segment& s = segments.segments[i];
        if (s.references.empty()) throw DataError("segment '" + s.track + "' has no references");
        const std::vector<Signal> est = sep(s.mixture);
        if (est.size() < s.references.size()) {
            throw DataError("separator returned " + std::to_string(est.size()) + " estimates for " +
                            std::to_string(s.references.size()) + " references");
        }
        std::vector<double> v(s.references.size());
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = si_sdr(EvalPair{est[j], s.references[j]});
        }
        return v;
    });
    const std::size_t sources = per_segment.front().size();
    double total = 0.0;
    for (std::size_t j = 0; j < sources; ++j) {
        double acc = 0.0;
        for (const auto& v : per_segment) {
            if (v.size() != sources) throw DataError("segments have different source counts");
            acc += v[j];
        }
        total += acc / static_cast<double>(per_segment.size());
    }
    return total / static_cast<double>(sources);
}

namespace {

std::vector<Signal> fit_outputs(const Tensor& y, std::size_t length, double rate) {
    const Tensor fitted = fit_cols(y, length);
    std::vector<Signal> out;
    for (std::size_t r = 0; r < fitted.rows; ++r) {
        Signal s = row_signal(fitted, r);
        s.sample_rate = rate;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

Separator model_separator(const Model& model, double rate) {
    if (!(rate > 0.0)) throw DataError("evaluation rate must be positive");
    if (model.spec().sfi()) {
        auto m = std::make_shared<const Model>(model.rate() == rate ? model : model.at_rate(rate));
        return [m, rate](const Signal& x) {
            if (x.sample_rate != rate) throw DataError("mixture rate does not match the evaluation rate");
            return fit_outputs(m->forward(to_tensor(x)), x.length(), rate);
        };
    }
    const double trained = model.spec().trained_rate;
    auto m = std::make_shared<const Model>(model.rate() == trained ? model : model.at_rate(trained));
    return [m, rate, trained](const Signal& x) {
        if (x.sample_rate != rate) throw DataError("mixture rate does not match the evaluation rate");
        if (rate == trained) return fit_outputs(m->forward(to_tensor(x)), x.length(), rate);
        const Signal up = resample_to_rate(x, trained);
        const std::vector<Signal> est = fit_outputs(m->forward(to_tensor(up)), up.length(), trained);
        std::vector<Signal> out;
        for (const auto& e : est) out.push_back(resample_to_rate(e, rate, {}, x.length()));
        return out;
    };
}

double evaluate_at_sf(const Model& model, const SegmentSet& segments, double test_rate) {
    if (!(test_rate > 0.0)) throw DataError("unsupported rate " + std::to_string(test_rate));
    if (segments.rate != test_rate) {
        throw DataError("segments are sampled at " + std::to_string(segments.rate) + " Hz, not " +
                        std::to_string(test_rate) + " Hz");
    }
    return evaluate_separator(model_separator(model, test_rate), segments);
}

}  // namespace sfi
