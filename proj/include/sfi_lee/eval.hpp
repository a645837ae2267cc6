#pragma once

// Separation quality: SI-SDR, degradation across rates, Pearson correlation.

#include "sfi_lee/dataset.hpp"
#include "sfi_lee/model.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sfi {

/// Returned when the residual vanishes.
inline constexpr double kSdrCap = 100.0;

struct EvalPair {
    Signal estimate;
    Signal reference;
};

/// 10 log10(|a s|^2 / |a s - s_hat|^2), a = <s_hat, s> / |s|^2, capped at kSdrCap.
double si_sdr(const EvalPair& pair);
double si_sdr(std::span<const double> estimate, std::span<const double> reference);

/// Sample correlation; throws DataError on fewer than two points or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Least-squares line y = slope * x + intercept.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit least_squares(std::span<const double> xs, std::span<const double> ys);

struct DegradationRow {
    std::string model_id;
    double sigma_init = 0.0;
    std::uint64_t seed = 0;
    double test_rate = 0.0;
    double sdr_trained = 0.0;
    double sdr_test = 0.0;
    double degradation = 0.0;  ///< sdr_trained - sdr_test
};

DegradationRow make_degradation(std::string model_id, double sigma_init, std::uint64_t seed, double test_rate,
                                double sdr_trained, double sdr_test);

/// Maps a mixture to one estimate per source, each as long as the mixture.
using Separator = std::function<std::vector<Signal>(const Signal&)>;

/// Mean SI-SDR over segments, then over sources.
double evaluate_separator(const Separator& sep, const SegmentSet& segments);

/// SFI models run natively at the segment rate; other models run at their
/// trained rate behind a resampler.
Separator model_separator(const Model& model, double rate);

/// Mean SI-SDR at `test_rate`; `segments` must be sampled at that rate.
double evaluate_at_sf(const Model& model, const SegmentSet& segments, double test_rate);

}  // namespace sfi
