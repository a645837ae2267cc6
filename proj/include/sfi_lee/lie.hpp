#pragma once

// Lie derivatives of maps under the resampling group.
//
// For a map f with input action g and output action g', the Lie derivative
// is d/dr [g'_{-r} f(g_r x)] at r = 0. Two estimators are provided: a
// central difference in r (optionally Richardson-extrapolated) and the
// linearised product-rule form J_f(x)[D_in x] - D_out f(x).

#include "sfi_lee/model.hpp"
#include "sfi_lee/resampler.hpp"
#include "sfi_lee/tensor.hpp"

#include <functional>
#include <optional>
#include <string>

namespace sfi {

enum class Space { Signal, Latent };

/// Resampling acting independently along the time axis of every row.
struct GroupAction {
    Space space = Space::Signal;
    WindowSpec window;

    /// Output has `out_cols` columns when given, else ceil(exp(r) * cols).
    Tensor apply(double r, const Tensor& v, std::optional<std::size_t> out_cols = std::nullopt) const;
    /// D applied row-wise (output length pinned to the input length).
    Tensor derivative(const Tensor& v) const;
};

struct ProbeMap {
    std::string name;
    std::function<Tensor(const Tensor&)> fn;
    GroupAction input;
    GroupAction output;
    bool linear = false;

    Tensor operator()(const Tensor& x) const { return fn(x); }
};

enum class Estimator { CentralFD, Linearized };

enum class LengthPolicy {
    Pinned,   ///< both actions keep the reference lengths (resampling rows beyond the natural length included)
    Natural,  ///< forward action uses ceil(exp(r) N); the result is cropped / zero-padded afterwards
};

struct LieOptions {
    Estimator estimator = Estimator::Linearized;
    double r_step = 1e-3;
    bool richardson = true;
    double jvp_eps = 1e-4;
    LengthPolicy lengths = LengthPolicy::Pinned;
};

struct LieEstimate {
    Tensor vector;
    Estimator estimator = Estimator::Linearized;
    double step = 0.0;
    double error_estimate = 0.0;
};

/// Central difference (f(x + h v) - f(x - h v)) / 2h, h = eps * |x| / |v|;
/// exactly f(v) for maps flagged linear.
Tensor jvp(const ProbeMap& f, const Tensor& x, const Tensor& v, double eps = 1e-4);

/// (h_r - h_{-r}) / 2r at `r_step`, plus Richardson with r_step / 2 when enabled.
LieEstimate lie_fd(const ProbeMap& f, const Tensor& x, const LieOptions& opts = {});
LieEstimate lie_linearized(const ProbeMap& f, const Tensor& x, const LieOptions& opts = {});
LieEstimate lie_derivative(const ProbeMap& f, const Tensor& x, const LieOptions& opts = {});

/// (4 E_{r/2} - E_r) / 3 with error estimate |E_{r/2} - E_r|.
LieEstimate richardson(const LieEstimate& coarse, const LieEstimate& fine);

/// The three components of a separation model, plus both compositions.
struct ModelProbes {
    ProbeMap encoder;
    ProbeMap mask;
    ProbeMap decoder;
    ProbeMap full;
    ProbeMap no_mask;
};

ModelProbes make_probes(const Model& model, const WindowSpec& window = {});

/// Uniformly rescales the output of a probe (used to check scale invariance).
ProbeMap scaled(ProbeMap f, double factor);

/// Lie derivative of the mask predictor at f_enc(x), latent action on both sides.
LieEstimate lie_layer_mask(const ModelProbes& probes, const Tensor& x, const LieOptions& opts = {});

struct ChainTerms {
    Tensor term_dec;   ///< L f_dec
    Tensor term_mask;  ///< J_dec L f_mask
    Tensor term_enc;   ///< J_dec J_mask L f_enc
    Tensor total;      ///< L f_NN
    double residual = 0.0;  ///< |total - sum of terms| / |total|
};

ChainTerms lie_chain_terms(const ModelProbes& probes, const Tensor& x, const LieOptions& opts = {});

}  // namespace sfi
