#include "sfi_lee/metrics.hpp"

#include "sfi_lee/parallel.hpp"

#include <cmath>
#include <numeric>

namespace sfi {

namespace {

// Runs fn per segment, tagging failures with the segment index.
template <typename Fn>
std::vector<double> per_segment(const std::vector<Tensor>& segments, Fn fn) {
    if (segments.empty()) {
        throw DataError("metric requires at least one segment");
    }
    return parallel_map(segments.size(), [&](std::size_t i) -> double {
        try {
            return fn(segments[i]);
        } catch (const NumericalError& e) {
            throw NumericalError("segment " + std::to_string(i) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("segment " + std::to_string(i) + ": " + e.what());
        }
    });
}

MetricResult finish(MetricKind kind, std::vector<double> values) {
    MetricResult r;
    r.kind = kind;
    r.segment_count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    r.aggregate = sum / static_cast<double>(values.size());
    r.per_segment = std::move(values);
    return r;
}

double log_ratio(double num, double den, const char* what) {
    if (!(den > 0.0)) {
        throw NumericalError(std::string(what) + " has zero norm");
    }
    const double v = std::log10(std::max(num / den, kRatioFloor));
    if (!std::isfinite(v)) {
        throw NumericalError(std::string("non-finite log ratio for ") + what);
    }
    return v;
}

double ln_lee_segment(const ProbeMap& f, const Tensor& x, const LieOptions& opts) {
    const Tensor y = f(x);
    const LieEstimate l = lie_derivative(f, x, opts);
    return log_ratio(norm2(l.vector), norm2(y), "model output");
}

}  // namespace

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::LEE: return "LEE";
        case MetricKind::LNLEE: return "LN-LEE";
        case MetricKind::LLNLEE: return "LLN-LEE";
        case MetricKind::DeltaLNLEE: return "dLN-LEE";
        case MetricKind::MaskLNLEE: return "Mask-LN-LEE";
    }
    return "?";
}

MetricKind metric_from_string(const std::string& name) {
    for (auto k : {MetricKind::LEE, MetricKind::LNLEE, MetricKind::LLNLEE, MetricKind::DeltaLNLEE,
                   MetricKind::MaskLNLEE}) {
        if (to_string(k) == name) return k;
    }
    throw DataError("unknown metric '" + name + "'");
}

MetricResult lee(const ProbeMap& f, const std::vector<Tensor>& segments, const LieOptions& opts) {
    return finish(MetricKind::LEE, per_segment(segments, [&](const Tensor& x) {
                      const LieEstimate l = lie_derivative(f, x, opts);
                      const double n = norm2(l.vector);
                      return n * n / static_cast<double>(l.vector.data.size());
                  }));
}

MetricResult ln_lee(const ProbeMap& f, const std::vector<Tensor>& segments, const LieOptions& opts) {
    return finish(MetricKind::LNLEE,
                  per_segment(segments, [&](const Tensor& x) { return ln_lee_segment(f, x, opts); }));
}

MetricResult lln_lee(const ModelProbes& p, const std::vector<Tensor>& segments, const LieOptions& opts) {
    return finish(MetricKind::LLNLEE, per_segment(segments, [&](const Tensor& x) {
                      const Tensor u = p.encoder(x);
                      const Tensor v = p.mask(u);
                      const LieEstimate l = lie_derivative(p.mask, u, opts);
                      const Tensor pushed = jvp(p.decoder, v, l.vector, opts.jvp_eps);
                      return log_ratio(norm2(pushed), norm2(v), "masked latent");
                  }));
}

MetricResult delta_ln_lee(const ModelProbes& p, const std::vector<Tensor>& segments, const LieOptions& opts) {
    const MetricResult full = ln_lee(p.full, segments, opts);
    const MetricResult bare = ln_lee(p.no_mask, segments, opts);
    MetricResult r;
    r.kind = MetricKind::DeltaLNLEE;
    r.segment_count = segments.size();
    r.per_segment.resize(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i) {
        r.per_segment[i] = full.per_segment[i] - bare.per_segment[i];
    }
    r.aggregate = full.aggregate - bare.aggregate;
    return r;
}

MetricResult mask_ln_lee(const ModelProbes& p, const std::vector<Tensor>& segments, const LieOptions& opts) {
    return finish(MetricKind::MaskLNLEE, per_segment(segments, [&](const Tensor& x) {
                      const Tensor u = p.encoder(x);
                      const Tensor v = p.mask(u);
                      const LieEstimate l = lie_derivative(p.mask, u, opts);
                      return log_ratio(norm2(l.vector), norm2(v), "masked latent");
                  }));
}

MetricResult compute_metric(MetricKind kind, const ModelProbes& p, const std::vector<Tensor>& segments,
                            const LieOptions& opts) {
    switch (kind) {
        case MetricKind::LEE: return lee(p.full, segments, opts);
        case MetricKind::LNLEE: return ln_lee(p.full, segments, opts);
        case MetricKind::LLNLEE: return lln_lee(p, segments, opts);
        case MetricKind::DeltaLNLEE: return delta_ln_lee(p, segments, opts);
        case MetricKind::MaskLNLEE: return mask_ln_lee(p, segments, opts);
    }
    throw std::logic_error("unhandled metric kind");
}

std::vector<BoundTerms> layerwise_bound_terms(const ModelProbes& p, const std::vector<Tensor>& segments,
                                              const LieOptions& opts) {
    if (segments.empty()) {
        throw DataError("layerwise bound requires at least one segment");
    }
    return parallel_map(segments.size(), [&](std::size_t i) {
        const ChainTerms c = lie_chain_terms(p, segments[i], opts);
        BoundTerms b;
        b.dec = norm2(c.term_dec);
        b.mask = norm2(c.term_mask);
        b.enc = norm2(c.term_enc);
        b.dec_enc = norm2(axpby(1.0, c.term_dec, 1.0, c.term_enc));
        b.total = norm2(c.total);
        b.no_mask = norm2(lie_derivative(p.no_mask, segments[i], opts).vector);
        return b;
    });
}

}  // namespace sfi
