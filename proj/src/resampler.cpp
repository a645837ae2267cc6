#include "sfi_lee/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sfi {

namespace {

constexpr double kPi = std::numbers::pi;

// Kernel and its derivative in units of input samples (u = F_s t).
double hann(double u, double half) {
    if (std::abs(u) > half) return 0.0;
    return 0.5 + 0.5 * std::cos(kPi * u / half);
}

double hann_derivative(double u, double half) {
    if (std::abs(u) > half) return 0.0;
    return -0.5 * (kPi / half) * std::sin(kPi * u / half);
}

double kappa(double u, double half) {
    if (std::abs(u) > half) return 0.0;
    return hann(u, half) * sinc(u);
}

double kappa_derivative(double u, double half) {
    if (std::abs(u) > half) return 0.0;
    return hann_derivative(u, half) * sinc(u) + hann(u, half) * sinc_derivative(u);
}

// Column range [lo, hi] touched by a kernel centred at c, clipped to [0, n).
std::pair<long, long> support_range(double c, double half, std::size_t n) {
    long lo = static_cast<long>(std::ceil(c - half));
    long hi = static_cast<long>(std::floor(c + half));
    lo = std::max(lo, 0L);
    hi = std::min(hi, static_cast<long>(n) - 1);
    return {lo, hi};
}

}  // namespace

void WindowSpec::validate() const {
    if (support < 2 || support % 2 != 0) {
        throw std::invalid_argument("window support L must be even and >= 2, got " + std::to_string(support));
    }
}

double sinc(double u) {
    if (u == 0.0) return 1.0;
    // Exact zeros at nonzero integers keep S(0) an exact identity.
    if (u == std::nearbyint(u)) return 0.0;
    const double x = kPi * u;
    return std::sin(x) / x;
}

double sinc_derivative(double u) {
    if (std::abs(u) < 1e-4) {
        // Series of (cos(pi u) - sinc(u))/u around 0.
        const double p2 = kPi * kPi;
        return -p2 * u / 3.0 + p2 * p2 * u * u * u / 30.0;
    }
    return (std::cos(kPi * u) - sinc(u)) / u;
}

double window_eval(double t, const WindowSpec& window, double fs) {
    return hann(fs * t, 0.5 * window.support);
}

double kernel_eval(double t, const WindowSpec& window, double fs) {
    return kappa(fs * t, 0.5 * window.support);
}

double kernel_derivative(double t, const WindowSpec& window, double fs) {
    return fs * kappa_derivative(fs * t, 0.5 * window.support);
}

std::size_t resampled_length(double r, std::size_t n) {
    const double target = std::exp(r) * static_cast<double>(n);
    // exp(log(q)) * n lands a few ulps above an integer for exact ratios.
    const double snapped = std::nearbyint(target);
    if (std::abs(target - snapped) <= 1e-9 * std::max(1.0, target)) {
        return static_cast<std::size_t>(snapped);
    }
    return static_cast<std::size_t>(std::ceil(target));
}

ResampleAction ResampleAction::make(double r, double source_rate, WindowSpec window, std::size_t in_length) {
    return pinned(r, source_rate, window, in_length, std::isfinite(r) ? resampled_length(r, in_length) : 0);
}

ResampleAction ResampleAction::pinned(double r, double source_rate, WindowSpec window, std::size_t in_length,
                                      std::size_t out_length) {
    if (!std::isfinite(r)) {
        throw std::invalid_argument("resample action: non-finite r");
    }
    if (!(source_rate > 0.0)) {
        throw std::invalid_argument("resample action: sample rate must be positive");
    }
    window.validate();
    return ResampleAction{r, source_rate, window, in_length, out_length};
}

Matrix build_matrix(const ResampleAction& action) {
    if (!std::isfinite(action.r)) {
        throw std::invalid_argument("build_matrix: non-finite r");
    }
    if (action.in_length == 0) {
        throw std::invalid_argument("build_matrix: in_length must be >= 1");
    }
    const double scale = std::exp(action.r);
    const double half = 0.5 * action.window.support;
    Matrix s(action.out_length, action.in_length);
    for (std::size_t m = 0; m < action.out_length; ++m) {
        const double c = static_cast<double>(m) / scale;
        for (std::size_t n = 0; n < action.in_length; ++n) {
            s(m, n) = kappa(c - static_cast<double>(n), half);
        }
    }
    return s;
}

Matrix build_derivative_matrix(std::size_t in_length, double fs, const WindowSpec& window) {
    if (in_length == 0) {
        throw std::invalid_argument("build_derivative_matrix: in_length must be >= 1");
    }
    window.validate();
    Matrix d(in_length, in_length);
    for (std::size_t m = 0; m < in_length; ++m) {
        for (std::size_t n = 0; n < in_length; ++n) {
            const double t = (static_cast<double>(m) - static_cast<double>(n)) / fs;
            d(m, n) = -(static_cast<double>(m) / fs) * kernel_derivative(t, window, fs);
        }
    }
    return d;
}

std::vector<double> apply(const ResampleAction& action, std::span<const double> x) {
    if (x.size() != action.in_length) {
        throw std::invalid_argument("resample apply: input length " + std::to_string(x.size()) +
                                    " does not match action length " + std::to_string(action.in_length));
    }
    const double scale = std::exp(action.r);
    const double half = 0.5 * action.window.support;
    std::vector<double> y(action.out_length, 0.0);
    for (std::size_t m = 0; m < action.out_length; ++m) {
        const double c = static_cast<double>(m) / scale;
        const auto [lo, hi] = support_range(c, half, x.size());
        double acc = 0.0;
        for (long n = lo; n <= hi; ++n) {
            acc += kappa(c - static_cast<double>(n), half) * x[static_cast<std::size_t>(n)];
        }
        y[m] = acc;
    }
    return y;
}

Signal apply(const ResampleAction& action, const Signal& x) {
    Signal out;
    out.samples = apply(action, std::span<const double>(x.samples));
    out.sample_rate = std::exp(action.r) * action.source_rate;
    return out;
}

std::vector<double> apply_derivative(std::span<const double> x, const WindowSpec& window) {
    window.validate();
    const int half = window.support / 2;
    std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
    for (int k = -half; k <= half; ++k) {
        taps[static_cast<std::size_t>(k + half)] = kappa_derivative(static_cast<double>(k), half);
    }
    const long n_len = static_cast<long>(x.size());
    std::vector<double> y(x.size(), 0.0);
    for (long m = 1; m < n_len; ++m) {
        const long lo = std::max(0L, m - half);
        const long hi = std::min(n_len - 1, m + half);
        double acc = 0.0;
        for (long n = lo; n <= hi; ++n) {
            acc += taps[static_cast<std::size_t>(m - n + half)] * x[static_cast<std::size_t>(n)];
        }
        y[static_cast<std::size_t>(m)] = -static_cast<double>(m) * acc;
    }
    return y;
}

Signal resample_to_rate(const Signal& x, double new_rate, const WindowSpec& window,
                        std::optional<std::size_t> out_length) {
    if (!(new_rate > 0.0) || !(x.sample_rate > 0.0)) {
        throw std::invalid_argument("resample_to_rate: rates must be positive");
    }
    window.validate();
    const double ratio = new_rate / x.sample_rate;
    const double r = std::log(ratio);
    const std::size_t n_out = out_length.value_or(resampled_length(r, x.length()));
    if (ratio >= 1.0) {
        return apply(ResampleAction::pinned(r, x.sample_rate, window, x.length(), n_out), x);
    }
    // Lowpass at the output Nyquist: kernel q*k(q u) with the window widened by 1/q.
    const double half = 0.5 * window.support / ratio;
    Signal out;
    out.sample_rate = new_rate;
    out.samples.assign(n_out, 0.0);
    for (std::size_t m = 0; m < n_out; ++m) {
        const double c = static_cast<double>(m) / ratio;
        const auto [lo, hi] = support_range(c, half, x.length());
        double acc = 0.0;
        for (long n = lo; n <= hi; ++n) {
            const double u = c - static_cast<double>(n);
            acc += ratio * hann(u, half) * sinc(ratio * u) * x.samples[static_cast<std::size_t>(n)];
        }
        out.samples[m] = acc;
    }
    return out;
}

}  // namespace sfi
