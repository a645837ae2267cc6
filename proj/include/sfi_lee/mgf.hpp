#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sfi {

/// Modulated Gaussian filter parameters for one channel (angular units, rad/s).
struct MGFParams {
    double mu = 0.0;     ///< centre angular frequency, >= 0
    double sigma = 1.0;  ///< bandwidth parameter, > 0
    double phi = 0.0;    ///< initial phase
};

/// A(w) = exp(-(w-mu)^2/(2 sigma^2) + j phi) + exp(-(w+mu)^2/(2 sigma^2) + j phi).
std::complex<double> mgf_frequency_response(double omega, const MGFParams& p);

/// Frequency-sampling design of a length-M real kernel for sample rate fs.
///
/// The response is sampled on the M-point DFT grid (bins above Nyquist wrap
/// to negative frequencies). The negative-frequency lobe carries the
/// conjugate phase so that the inverse DFT is real for any phi; for phi = 0
/// this is exactly mgf_frequency_response. The kernel is rotated so that
/// the envelope peak sits at index M/2.
std::vector<double> design_filter(const MGFParams& p, double fs, std::size_t kernel_length);

/// Mel-scale helpers used for centre-frequency initialisation.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace sfi
