#include "sfi_lee/mgf.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sfi {

namespace {

double gauss(double d, double sigma) {
    return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

}  // namespace

std::complex<double> mgf_frequency_response(double omega, const MGFParams& p) {
    const std::complex<double> phase = std::polar(1.0, p.phi);
    return (gauss(omega - p.mu, p.sigma) + gauss(omega + p.mu, p.sigma)) * phase;
}

std::vector<double> design_filter(const MGFParams& p, double fs, std::size_t kernel_length) {
    if (kernel_length < 2) {
        throw std::invalid_argument("design_filter: kernel length must be >= 2");
    }
    if (!(p.sigma > 0.0) || !(fs > 0.0)) {
        throw std::invalid_argument("design_filter: sigma and sample rate must be positive");
    }
    const std::size_t m_len = kernel_length;
    const double md = static_cast<double>(m_len);
    const std::complex<double> pos = std::polar(1.0, p.phi);
    const std::complex<double> neg = std::conj(pos);

    std::vector<std::complex<double>> spectrum(m_len);
    for (std::size_t k = 0; k < m_len; ++k) {
        const double kk = (2 * k > m_len) ? static_cast<double>(k) - md : static_cast<double>(k);
        const double omega = 2.0 * std::numbers::pi * fs * kk / md;
        spectrum[k] = gauss(omega - p.mu, p.sigma) * pos + gauss(omega + p.mu, p.sigma) * neg;
    }

    // Direct inverse DFT; kernels are designed once per rate.
    const std::size_t shift = m_len / 2;
    std::vector<double> kernel(m_len, 0.0);
    for (std::size_t n = 0; n < m_len; ++n) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m_len; ++k) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * n) % m_len) / md;
            acc += spectrum[k].real() * std::cos(angle) - spectrum[k].imag() * std::sin(angle);
        }
        kernel[(n + shift) % m_len] = acc / md;
    }
    return kernel;
}

double hz_to_mel(double hz) {
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace sfi
