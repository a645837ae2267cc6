#include "sfi_lee/tensor.hpp"

#include <algorithm>

namespace sfi {

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    if (x.size() != m.cols) {
        throw std::invalid_argument("matvec: length mismatch");
    }
    std::vector<double> y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) {
            acc += row[c] * x[c];
        }
        y[r] = acc;
    }
    return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimension mismatch");
    }
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

Tensor axpby(double a, const Tensor& x, double b, const Tensor& y) {
    if (!x.same_shape(y)) {
        throw std::invalid_argument("axpby: shape mismatch");
    }
    Tensor out(x.rows, x.cols, x.rate);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = a * x.data[i] + b * y.data[i];
    }
    return out;
}

Tensor fit_cols(const Tensor& t, std::size_t cols) {
    if (cols == t.cols) return t;
    Tensor out(t.rows, cols, t.rate);
    const std::size_t keep = std::min(cols, t.cols);
    for (std::size_t r = 0; r < t.rows; ++r) {
        std::copy_n(t.row(r).begin(), keep, out.row(r).begin());
    }
    return out;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace sfi
