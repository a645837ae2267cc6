#pragma once

// Windowed-sinc resampling as a one-parameter group action.
//
// The action g_r maps a signal sampled at F_s to rate exp(r)*F_s through the
// linear map (S)_{m,n} = k((m/exp(r) - n)/F_s), k(t) = z(t) sinc(F_s t), with
// z a Hann window of half-width L/(2 F_s). D = dS/dr at r = 0 is the
// generator used by the Lie derivative estimators.

#include "sfi_lee/tensor.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sfi {

enum class WindowKind { Hann };

struct WindowSpec {
    WindowKind kind = WindowKind::Hann;
    int support = 24;  ///< L, total support in input samples; even and >= 2

    void validate() const;
};

double sinc(double u);
/// d/du sinc(u).
double sinc_derivative(double u);

double window_eval(double t, const WindowSpec& window, double fs);
double kernel_eval(double t, const WindowSpec& window, double fs);
/// dk/dt in 1/seconds.
double kernel_derivative(double t, const WindowSpec& window, double fs);

/// ceil(exp(r) * n), robust to the rounding of exp(log(q)).
std::size_t resampled_length(double r, std::size_t n);

struct ResampleAction {
    double r = 0.0;
    double source_rate = 0.0;
    WindowSpec window;
    std::size_t in_length = 0;
    std::size_t out_length = 0;

    /// Natural output length ceil(exp(r) * in_length).
    static ResampleAction make(double r, double source_rate, WindowSpec window, std::size_t in_length);
    /// Output length pinned to `out_length` (rows of the resampling map beyond the
    /// natural length reference zero padding).
    static ResampleAction pinned(double r, double source_rate, WindowSpec window, std::size_t in_length,
                                 std::size_t out_length);
};

Matrix build_matrix(const ResampleAction& action);
Matrix build_derivative_matrix(std::size_t in_length, double fs, const WindowSpec& window);

/// Sparse application of S; columns are summed in ascending order.
std::vector<double> apply(const ResampleAction& action, std::span<const double> x);
Signal apply(const ResampleAction& action, const Signal& x);

/// Sparse application of D (pinned to the input length).
std::vector<double> apply_derivative(std::span<const double> x, const WindowSpec& window);

/// General-purpose rate conversion for I/O and evaluation paths. Upsampling
/// is the group action itself; downsampling scales the sinc cutoff to the
/// new Nyquist rate so content above it is attenuated rather than aliased.
Signal resample_to_rate(const Signal& x, double new_rate, const WindowSpec& window = {},
                        std::optional<std::size_t> out_length = std::nullopt);

}  // namespace sfi
