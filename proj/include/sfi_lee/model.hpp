#pragma once

// Forward-only encoder / mask predictor / decoder separation models.

#include "sfi_lee/mgf.hpp"
#include "sfi_lee/tensor.hpp"
#include "sfi_lee/weights.hpp"

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace sfi {

enum class Nonlinearity { ReLU, None };
enum class FilterSource { Learned, MGF };
enum class EncoderInit { Random, Orthogonal };

struct EncoderSpec {
    std::size_t in_length_hint = 0;
    std::size_t channels = 64;
    std::size_t kernel = 512;
    std::size_t hop = 128;
    Nonlinearity nonlinearity = Nonlinearity::None;
    FilterSource filter_source = FilterSource::MGF;
    EncoderInit init = EncoderInit::Random;  ///< learned filters only
};

enum class MaskKind { TCN, Linear };
enum class MaskInit { Random, BandSplit };

struct MaskPredictorSpec {
    MaskKind kind = MaskKind::TCN;
    std::size_t blocks = 2;
    std::size_t hidden = 32;
    std::vector<std::size_t> dilations;  ///< empty: 1, 2, 4, ...
    std::size_t sources = 2;
    double weight_scale = 1.0;
    MaskInit init = MaskInit::Random;
    double split_hz = 1500.0;  ///< band-split init: source 0 below, source 1 above
    double split_gain = 4.0;   ///< band-split init: output bias magnitude

    std::size_t dilation(std::size_t block) const;
    /// Receptive field in frames of the block stack.
    std::size_t receptive_field() const;
};

struct ModelSpec {
    std::string id = "toy";
    EncoderSpec encoder;
    MaskPredictorSpec mask;
    double trained_rate = 32000.0;
    double sigma_init = 10.0 * std::numbers::pi;

    bool sfi() const { return encoder.filter_source == FilterSource::MGF; }
    void validate() const;
    /// Stable text digest of every field, stored in weight files.
    std::string hash() const;
    std::vector<TensorShape> tensor_shapes() const;
};

/// Multiplicative frame-position perturbation (1 + lambda sin(2 pi t / period)) on the mask output.
struct MaskPerturbation {
    double lambda = 0.0;
    double period_frames = 64.0;
};

/// Small named configurations used by the property tests:
/// "linear" (learned filters, linear mask, bias-free), "tcn" (MGF filters,
/// TCN mask), "relu" (learned filters, ReLU encoder, TCN mask) and
/// "band-split" (MGF filters, band-split TCN mask).
std::vector<ModelSpec> model_zoo();

WeightBundle init_weights(const ModelSpec& spec, std::uint64_t seed);

/// Forces every mask to exactly 1 (zero output weights, saturating bias).
void force_unit_masks(WeightBundle& bundle, const ModelSpec& spec);

class Model {
public:
    /// Materialises the model at `rate`. MGF filters are redesigned for the
    /// rate; learned filters only run at the trained rate.
    Model(ModelSpec spec, WeightBundle weights, double rate);
    Model(ModelSpec spec, WeightBundle weights) : Model(spec, std::move(weights), spec.trained_rate) {}

    Model at_rate(double rate) const;

    const ModelSpec& spec() const { return spec_; }
    const WeightBundle& weights() const { return weights_; }
    double rate() const { return rate_; }
    std::size_t channels() const { return spec_.encoder.channels; }
    std::size_t sources() const { return spec_.mask.sources; }

    void set_perturbation(MaskPerturbation p) { perturbation_ = p; }
    const MaskPerturbation& perturbation() const { return perturbation_; }

    /// x: one row at the model rate. Returns C x T at rate / hop.
    Latent encode(const Tensor& x) const;
    /// u: C x T. Returns S*C x T masked latents (source-major).
    Tensor mask(const Latent& u) const;
    /// v: k*C x T. Returns k rows of length (T-1)*hop + kernel.
    Tensor decode(const Tensor& v) const;

    Tensor forward(const Tensor& x) const { return decode(mask(encode(x))); }
    Tensor forward_no_mask(const Tensor& x) const { return decode(encode(x)); }

    std::size_t frames_for(std::size_t samples) const;
    std::size_t samples_for(std::size_t frames) const;

    bool encoder_is_linear() const;
    bool decoder_is_linear() const;
    bool mask_is_linear() const { return spec_.mask.kind == MaskKind::Linear && perturbation_.lambda == 0.0; }

    const std::vector<double>& encoder_kernels() const { return enc_kernels_; }
    const std::vector<double>& decoder_kernels() const { return dec_kernels_; }

private:
    void materialise();
    Tensor mask_tcn(const Latent& u) const;
    Tensor mask_linear(const Latent& u) const;

    ModelSpec spec_;
    WeightBundle weights_;
    double rate_;
    MaskPerturbation perturbation_;

    std::vector<double> enc_kernels_;  // C x K
    std::vector<double> dec_kernels_;  // C x K
    std::vector<double> enc_bias_;
    double dec_bias_ = 0.0;
};

// Signal-level entry points.
Latent encoder_forward(const Signal& x, const Model& model);
Tensor mask_forward(const Latent& u, const Model& model);
Signal decoder_forward(const Latent& v, const Model& model);
std::vector<Signal> model_forward(const Signal& x, const Model& model);
Signal no_mask_forward(const Signal& x, const Model& model);

/// MGF parameters of the encoder (prefix "encoder") or decoder (prefix "decoder").
std::vector<MGFParams> mgf_params(const WeightBundle& bundle, const std::string& prefix);

/// 64-bit FNV-1a over the bytes of every sample; used for golden checksums.
std::uint64_t checksum(const Tensor& t);

}  // namespace sfi
