#pragma once

// Equivariance-error metrics over a set of segments.
//
// Per-segment values are computed independently and aggregated as their
// arithmetic mean in segment order. Norms are Euclidean over every element
// of every source (outputs of multi-source maps are concatenated).

#include "sfi_lee/lie.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sfi {

enum class MetricKind { LEE, LNLEE, LLNLEE, DeltaLNLEE, MaskLNLEE };

std::string to_string(MetricKind kind);
MetricKind metric_from_string(const std::string& name);

/// Ratios below this are clamped before taking log10, so an exactly
/// equivariant map reports -15 instead of -inf.
inline constexpr double kRatioFloor = 1e-15;

struct MetricResult {
    MetricKind kind = MetricKind::LNLEE;
    std::vector<double> per_segment;
    double aggregate = 0.0;
    std::size_t segment_count = 0;
    std::uint64_t seed = 0;
    std::string model_id;
};

/// Mean over segments of |L f(x)|^2 / V, V the element count of f(x).
MetricResult lee(const ProbeMap& f, const std::vector<Tensor>& segments, const LieOptions& opts = {});

/// Mean over segments of log10(|L f(x)| / |f(x)|).
MetricResult ln_lee(const ProbeMap& f, const std::vector<Tensor>& segments, const LieOptions& opts = {});

/// Mean of log10(|J_dec L f_mask(f_enc x)| / |f_mask(f_enc x)|).
MetricResult lln_lee(const ModelProbes& p, const std::vector<Tensor>& segments, const LieOptions& opts = {});

/// LN-LEE(f_NN) - LN-LEE(f_no_mask); per_segment holds the per-segment differences.
MetricResult delta_ln_lee(const ModelProbes& p, const std::vector<Tensor>& segments, const LieOptions& opts = {});

/// Mean of log10(|L f_mask(f_enc x)| / |f_mask(f_enc x)|).
MetricResult mask_ln_lee(const ModelProbes& p, const std::vector<Tensor>& segments, const LieOptions& opts = {});

MetricResult compute_metric(MetricKind kind, const ModelProbes& p, const std::vector<Tensor>& segments,
                            const LieOptions& opts = {});

struct BoundTerms {
    double dec = 0.0;       ///< |L f_dec|
    double mask = 0.0;      ///< |J_dec L f_mask|
    double enc = 0.0;       ///< |J_dec J_mask L f_enc|
    double dec_enc = 0.0;   ///< |L f_dec + J_dec J_mask L f_enc|
    double total = 0.0;     ///< |L f_NN|
    double no_mask = 0.0;   ///< |L f_no_mask|

    /// dec + mask + enc - total; >= 0 when the triangle inequality holds.
    double upper_slack() const { return dec + mask + enc - total; }
    /// mask - (total - dec_enc); >= 0 when the reverse triangle inequality holds.
    double lower_slack() const { return mask - (total - dec_enc); }
    /// mask - (total - no_mask): the same bound with L f_no_mask standing in
    /// for the encoder and decoder terms. Only approximate when J_mask is far
    /// from the identity.
    double no_mask_lower_slack() const { return mask - (total - no_mask); }
};

std::vector<BoundTerms> layerwise_bound_terms(const ModelProbes& p, const std::vector<Tensor>& segments,
                                              const LieOptions& opts = {});

}  // namespace sfi
