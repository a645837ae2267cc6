#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfi {

// Failure categories surfaced by the CLI as distinct exit codes.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sampled mono waveform.
struct Signal {
    std::vector<double> samples;
    double sample_rate = 0.0;

    std::size_t length() const { return samples.size(); }
};

/// Multi-row sequence sampled along its column (time) axis at `rate`.
///
/// One row is a waveform; C rows are a latent with C channels; S*C rows hold
/// S stacked per-source latents. The resampling group acts on every row
/// independently.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double rate = 0.0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double rate_hz)
        : rows(r), cols(c), rate(rate_hz), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

/// Latent (pseudo time-frequency) representation: channels x frames at the frame rate.
using Latent = Tensor;

inline Tensor to_tensor(const Signal& s) {
    Tensor t(1, s.samples.size(), s.sample_rate);
    t.data = s.samples;
    return t;
}

inline Signal row_signal(const Tensor& t, std::size_t r) {
    Signal s;
    s.sample_rate = t.rate;
    auto src = t.row(r);
    s.samples.assign(src.begin(), src.end());
    return s;
}

/// Dense row-major matrix, used for oracles and small linear probes.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

std::vector<double> matvec(const Matrix& m, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);

double norm2(std::span<const double> v);
inline double norm2(const Tensor& t) { return norm2(t.data); }

/// out = a*x + b*y, elementwise; shapes must match.
Tensor axpby(double a, const Tensor& x, double b, const Tensor& y);

/// Crop or zero-pad every row to `cols` columns.
Tensor fit_cols(const Tensor& t, std::size_t cols);

bool all_finite(std::span<const double> v);

}  // namespace sfi
