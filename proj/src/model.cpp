#include "sfi_lee/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <random>
#include <sstream>

namespace sfi {

namespace {

constexpr double kUnitMaskBias = 40.0;  // sigmoid(40) rounds to exactly 1.0

const std::vector<float>& values(const WeightBundle& b, const std::string& name) {
    return b.get(name).values;
}

std::string block_name(std::size_t b, const char* what) {
    return "mask.block" + std::to_string(b) + "." + what;
}

double mel_grid_hz(std::size_t c, std::size_t channels, double trained_rate) {
    const double top = hz_to_mel(0.5 * trained_rate);
    return mel_to_hz(top * static_cast<double>(c + 1) / static_cast<double>(channels));
}

// Median of Re(sum_c D_c conj(E_c)) / hop over bins in (0, 0.4 fs].
double synthesis_gain(const std::vector<double>& enc, const std::vector<double>& dec, std::size_t channels,
                      std::size_t k_len, std::size_t hop, double fs) {
    std::vector<double> transfer;
    const double kd = static_cast<double>(k_len);
    for (std::size_t bin = 1; 2 * bin <= k_len; ++bin) {
        if (fs * static_cast<double>(bin) / kd > 0.4 * fs) break;
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            std::complex<double> e{}, d{};
            for (std::size_t n = 0; n < k_len; ++n) {
                const double angle = -2.0 * std::numbers::pi * static_cast<double>((bin * n) % k_len) / kd;
                const std::complex<double> w(std::cos(angle), std::sin(angle));
                e += enc[c * k_len + n] * w;
                d += dec[c * k_len + n] * w;
            }
            acc += (d * std::conj(e)).real();
        }
        transfer.push_back(acc / static_cast<double>(hop));
    }
    if (transfer.empty()) return 1.0;
    std::nth_element(transfer.begin(), transfer.begin() + static_cast<long>(transfer.size() / 2), transfer.end());
    const double med = transfer[transfer.size() / 2];
    return med > 0.0 ? 1.0 / med : 1.0;
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

std::size_t MaskPredictorSpec::dilation(std::size_t block) const {
    if (block < dilations.size()) return dilations[block];
    return std::size_t{1} << block;
}

std::size_t MaskPredictorSpec::receptive_field() const {
    if (kind == MaskKind::Linear) return 3;
    std::size_t rf = 1;
    for (std::size_t b = 0; b < blocks; ++b) rf += 2 * dilation(b);
    return rf;
}

void ModelSpec::validate() const {
    const auto& e = encoder;
    if (e.channels < 1) throw ConfigError("encoder channels must be >= 1");
    if (e.hop < 1 || e.hop > e.kernel) throw ConfigError("encoder hop must satisfy 1 <= hop <= kernel");
    if (e.filter_source == FilterSource::MGF && e.kernel < 2) throw ConfigError("MGF kernels need length >= 2");
    if (mask.sources < 1) throw ConfigError("mask predictor needs >= 1 source");
    if (mask.kind == MaskKind::TCN && (mask.blocks < 1 || mask.hidden < 1)) {
        throw ConfigError("mask predictor needs >= 1 block and >= 1 hidden channel");
    }
    if (!(trained_rate > 0.0)) throw ConfigError("trained rate must be positive");
    if (!(sigma_init > 0.0)) throw ConfigError("sigma_init must be positive");
}

std::string ModelSpec::hash() const {
    std::ostringstream os;
    os.precision(17);
    os << id << '|' << encoder.channels << '|' << encoder.kernel << '|' << encoder.hop << '|'
       << static_cast<int>(encoder.nonlinearity) << '|' << static_cast<int>(encoder.filter_source) << '|'
       << static_cast<int>(encoder.init) << '|' << static_cast<int>(mask.kind) << '|' << mask.blocks << '|'
       << mask.hidden << '|' << mask.sources << '|' << mask.weight_scale << '|' << static_cast<int>(mask.init)
       << '|' << mask.split_hz << '|' << mask.split_gain << '|' << trained_rate << '|' << sigma_init;
    for (std::size_t b = 0; b < mask.blocks; ++b) os << '|' << mask.dilation(b);
    const std::string text = os.str();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

std::vector<TensorShape> ModelSpec::tensor_shapes() const {
    const std::size_t c = encoder.channels;
    const std::size_t k = encoder.kernel;
    std::vector<TensorShape> out;
    for (const char* side : {"encoder", "decoder"}) {
        const std::string s(side);
        if (encoder.filter_source == FilterSource::MGF) {
            out.push_back({s + ".mgf.mu", {c}});
            out.push_back({s + ".mgf.sigma", {c}});
            out.push_back({s + ".mgf.phi", {c}});
        } else {
            out.push_back({s + ".weight", {c, k}});
        }
    }
    out.push_back({"encoder.bias", {c}});
    out.push_back({"decoder.gain", {1}});
    out.push_back({"decoder.bias", {1}});
    const std::size_t sc = mask.sources * c;
    if (mask.kind == MaskKind::Linear) {
        out.push_back({"mask.linear.weight", {sc, c, 3}});
        return out;
    }
    const std::size_t hd = mask.hidden;
    out.push_back({"mask.in.weight", {hd, c}});
    out.push_back({"mask.in.bias", {hd}});
    for (std::size_t b = 0; b < mask.blocks; ++b) {
        out.push_back({block_name(b, "weight"), {hd, hd, 3}});
        out.push_back({block_name(b, "bias"), {hd}});
        out.push_back({block_name(b, "gamma"), {hd}});
        out.push_back({block_name(b, "beta"), {hd}});
    }
    out.push_back({"mask.out.weight", {sc, hd}});
    out.push_back({"mask.out.bias", {sc}});
    return out;
}

std::vector<ModelSpec> model_zoo() {
    std::vector<ModelSpec> zoo;
    ModelSpec linear;
    linear.id = "linear";
    linear.encoder = {0, 8, 16, 8, Nonlinearity::None, FilterSource::Learned, EncoderInit::Random};
    linear.mask.kind = MaskKind::Linear;
    zoo.push_back(linear);

    ModelSpec tcn;
    tcn.id = "tcn";
    tcn.encoder = {0, 16, 32, 16, Nonlinearity::None, FilterSource::MGF, EncoderInit::Random};
    tcn.mask.hidden = 8;
    tcn.sigma_init = 2.0 * std::numbers::pi * 200.0;
    zoo.push_back(tcn);

    ModelSpec relu;
    relu.id = "relu";
    relu.encoder = {0, 8, 16, 8, Nonlinearity::ReLU, FilterSource::Learned, EncoderInit::Random};
    relu.mask.hidden = 8;
    zoo.push_back(relu);

    ModelSpec band = tcn;
    band.id = "band-split";
    band.mask.init = MaskInit::BandSplit;
    band.mask.weight_scale = 0.1;
    zoo.push_back(band);
    return zoo;
}

WeightBundle init_weights(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    WeightBundle b;
    b.seed = seed;
    b.spec_hash = spec.hash();
    b.trained_rate = spec.trained_rate;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t c = spec.encoder.channels;
    const std::size_t k = spec.encoder.kernel;
    const double ws = spec.mask.weight_scale;

    for (const auto& shape : spec.tensor_shapes()) {
        NamedTensor t{shape.name, shape.shape, {}};
        t.values.assign(t.element_count(), 0.0f);
        const std::string& n = shape.name;
        auto gaussian = [&](double stddev) {
            for (auto& v : t.values) v = static_cast<float>(stddev * normal(rng));
        };
        if (n.ends_with(".mgf.mu")) {
            for (std::size_t i = 0; i < c; ++i) {
                t.values[i] = static_cast<float>(2.0 * std::numbers::pi * mel_grid_hz(i, c, spec.trained_rate));
            }
        } else if (n.ends_with(".mgf.sigma")) {
            std::fill(t.values.begin(), t.values.end(), static_cast<float>(spec.sigma_init));
        } else if (n.ends_with(".mgf.phi")) {
            for (std::size_t i = 0; i < c; ++i) {
                t.values[i] = (i % 2 == 0) ? 0.0f : static_cast<float>(std::numbers::pi / 2.0);
            }
        } else if (n == "encoder.weight" || n == "decoder.weight") {
            if (spec.encoder.init == EncoderInit::Orthogonal) {
                // Orthonormal DCT-II basis; the decoder uses the same rows.
                for (std::size_t i = 0; i < c; ++i) {
                    const double scale = std::sqrt((i == 0 ? 1.0 : 2.0) / static_cast<double>(k));
                    for (std::size_t j = 0; j < k; ++j) {
                        t.values[i * k + j] = static_cast<float>(
                            scale * std::cos(std::numbers::pi * (static_cast<double>(j) + 0.5) *
                                             static_cast<double>(i) / static_cast<double>(k)));
                    }
                }
            } else {
                gaussian(1.0 / std::sqrt(static_cast<double>(k)));
            }
        } else if (n == "decoder.gain") {
            t.values[0] = 1.0f;
        } else if (n == "mask.in.weight") {
            gaussian(ws / std::sqrt(static_cast<double>(c)));
        } else if (n.starts_with("mask.block") && n.ends_with(".weight")) {
            gaussian(ws / std::sqrt(3.0 * static_cast<double>(spec.mask.hidden)));
        } else if (n.ends_with(".gamma")) {
            std::fill(t.values.begin(), t.values.end(), 1.0f);
        } else if (n == "mask.out.weight") {
            gaussian(ws / std::sqrt(static_cast<double>(spec.mask.hidden)));
        } else if (n == "mask.out.bias" && spec.mask.init == MaskInit::BandSplit) {
            for (std::size_t s = 0; s < spec.mask.sources; ++s) {
                for (std::size_t i = 0; i < c; ++i) {
                    const bool low = mel_grid_hz(i, c, spec.trained_rate) < spec.mask.split_hz;
                    const bool mine = (s == 0 && low) || (s == 1 && !low);
                    t.values[s * c + i] = static_cast<float>(mine ? spec.mask.split_gain : -spec.mask.split_gain);
                }
            }
        } else if (n == "mask.linear.weight") {
            gaussian(ws / std::sqrt(3.0 * static_cast<double>(c)));
        }
        b.tensors.push_back(std::move(t));
    }
    return b;
}

void force_unit_masks(WeightBundle& bundle, const ModelSpec& spec) {
    if (spec.mask.kind != MaskKind::TCN) {
        throw std::invalid_argument("force_unit_masks: only the TCN mask predictor has an output sigmoid");
    }
    auto& w = bundle.get("mask.out.weight").values;
    std::fill(w.begin(), w.end(), 0.0f);
    auto& bias = bundle.get("mask.out.bias").values;
    std::fill(bias.begin(), bias.end(), static_cast<float>(kUnitMaskBias));
}

std::vector<MGFParams> mgf_params(const WeightBundle& bundle, const std::string& prefix) {
    const auto& mu = values(bundle, prefix + ".mgf.mu");
    const auto& sigma = values(bundle, prefix + ".mgf.sigma");
    const auto& phi = values(bundle, prefix + ".mgf.phi");
    std::vector<MGFParams> out(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        out[i] = MGFParams{mu[i], sigma[i], phi[i]};
    }
    return out;
}

Model::Model(ModelSpec spec, WeightBundle weights, double rate)
    : spec_(std::move(spec)), weights_(std::move(weights)), rate_(rate) {
    spec_.validate();
    if (!(rate_ > 0.0)) {
        throw DataError("unsupported sample rate " + std::to_string(rate_));
    }
    validate_bundle(weights_, spec_.tensor_shapes());
    materialise();
}

Model Model::at_rate(double rate) const {
    Model m(spec_, weights_, rate);
    m.perturbation_ = perturbation_;
    return m;
}

void Model::materialise() {
    const std::size_t c = spec_.encoder.channels;
    const std::size_t k = spec_.encoder.kernel;
    const double gain = values(weights_, "decoder.gain")[0];
    enc_kernels_.assign(c * k, 0.0);
    dec_kernels_.assign(c * k, 0.0);

    if (spec_.sfi()) {
        const auto enc = mgf_params(weights_, "encoder");
        const auto dec = mgf_params(weights_, "decoder");
        for (std::size_t i = 0; i < c; ++i) {
            const auto ek = design_filter(enc[i], rate_, k);
            const auto dk = design_filter(dec[i], rate_, k);
            std::copy(ek.begin(), ek.end(), enc_kernels_.begin() + static_cast<long>(i * k));
            std::copy(dk.begin(), dk.end(), dec_kernels_.begin() + static_cast<long>(i * k));
        }
        const double norm = synthesis_gain(enc_kernels_, dec_kernels_, c, k, spec_.encoder.hop, rate_);
        for (auto& v : dec_kernels_) v *= norm * gain;
    } else {
        if (rate_ != spec_.trained_rate) {
            throw DataError("learned-filter model trained at " + std::to_string(spec_.trained_rate) +
                            " Hz cannot run natively at " + std::to_string(rate_) + " Hz");
        }
        const auto& ew = values(weights_, "encoder.weight");
        const auto& dw = values(weights_, "decoder.weight");
        for (std::size_t i = 0; i < c * k; ++i) {
            enc_kernels_[i] = ew[i];
            dec_kernels_[i] = gain * dw[i];
        }
    }
    const auto& eb = values(weights_, "encoder.bias");
    enc_bias_.assign(eb.begin(), eb.end());
    dec_bias_ = values(weights_, "decoder.bias")[0];
}

std::size_t Model::frames_for(std::size_t samples) const {
    const auto& e = spec_.encoder;
    return samples < e.kernel ? 0 : (samples - e.kernel) / e.hop + 1;
}

std::size_t Model::samples_for(std::size_t frames) const {
    const auto& e = spec_.encoder;
    return frames == 0 ? 0 : (frames - 1) * e.hop + e.kernel;
}

bool Model::encoder_is_linear() const {
    return spec_.encoder.nonlinearity == Nonlinearity::None &&
           std::all_of(enc_bias_.begin(), enc_bias_.end(), [](double b) { return b == 0.0; });
}

bool Model::decoder_is_linear() const {
    return dec_bias_ == 0.0;
}

Latent Model::encode(const Tensor& x) const {
    const auto& e = spec_.encoder;
    if (x.rows != 1) {
        throw std::invalid_argument("encoder expects a single-row signal, got " + std::to_string(x.rows) + " rows");
    }
    if (x.cols < e.kernel) {
        throw DataError("input of " + std::to_string(x.cols) + " samples is shorter than the encoder kernel (" +
                        std::to_string(e.kernel) + ")");
    }
    const std::size_t t_len = frames_for(x.cols);
    Latent u(e.channels, t_len, x.rate / static_cast<double>(e.hop));
    const bool relu = e.nonlinearity == Nonlinearity::ReLU;
    for (std::size_t c = 0; c < e.channels; ++c) {
        const double* w = enc_kernels_.data() + c * e.kernel;
        for (std::size_t t = 0; t < t_len; ++t) {
            const double* xs = x.data.data() + t * e.hop;
            double acc = enc_bias_[c];
            for (std::size_t k = 0; k < e.kernel; ++k) acc += w[k] * xs[k];
            u.at(c, t) = relu ? std::max(acc, 0.0) : acc;
        }
    }
    return u;
}

Tensor Model::mask(const Latent& u) const {
    if (u.rows != spec_.encoder.channels) {
        throw std::invalid_argument("mask predictor expects " + std::to_string(spec_.encoder.channels) +
                                    " latent channels, got " + std::to_string(u.rows));
    }
    Tensor out = spec_.mask.kind == MaskKind::Linear ? mask_linear(u) : mask_tcn(u);
    if (perturbation_.lambda != 0.0) {
        for (std::size_t t = 0; t < out.cols; ++t) {
            const double g = 1.0 + perturbation_.lambda * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                                                   perturbation_.period_frames);
            for (std::size_t r = 0; r < out.rows; ++r) out.at(r, t) *= g;
        }
    }
    return out;
}

Tensor Model::mask_tcn(const Latent& u) const {
    const std::size_t c_len = spec_.encoder.channels;
    const std::size_t hd = spec_.mask.hidden;
    const std::size_t t_len = u.cols;
    const std::size_t sc = spec_.mask.sources * c_len;

    std::vector<double> h(hd * t_len);
    {
        const auto& w = values(weights_, "mask.in.weight");
        const auto& b = values(weights_, "mask.in.bias");
        for (std::size_t o = 0; o < hd; ++o) {
            for (std::size_t t = 0; t < t_len; ++t) {
                double acc = b[o];
                for (std::size_t i = 0; i < c_len; ++i) acc += w[o * c_len + i] * u.at(i, t);
                h[o * t_len + t] = acc;
            }
        }
    }

    std::vector<double> z(hd * t_len);
    for (std::size_t blk = 0; blk < spec_.mask.blocks; ++blk) {
        const auto& w = values(weights_, block_name(blk, "weight"));
        const auto& b = values(weights_, block_name(blk, "bias"));
        const auto& gamma = values(weights_, block_name(blk, "gamma"));
        const auto& beta = values(weights_, block_name(blk, "beta"));
        const long d = static_cast<long>(spec_.mask.dilation(blk));
        const long tl = static_cast<long>(t_len);
        for (std::size_t o = 0; o < hd; ++o) {
            for (long t = 0; t < tl; ++t) {
                double acc = b[o];
                for (std::size_t i = 0; i < hd; ++i) {
                    const float* wk = w.data() + (o * hd + i) * 3;
                    const double* hi = h.data() + i * t_len;
                    for (long tap = 0; tap < 3; ++tap) {
                        const long src = t + (tap - 1) * d;
                        if (src >= 0 && src < tl) acc += wk[tap] * hi[src];
                    }
                }
                z[o * t_len + static_cast<std::size_t>(t)] = acc;
            }
        }
        // Global layer norm over (channel, frame).
        double mean = 0.0;
        for (double v : z) mean += v;
        mean /= static_cast<double>(z.size());
        double var = 0.0;
        for (double v : z) var += (v - mean) * (v - mean);
        var /= static_cast<double>(z.size());
        const double inv = 1.0 / std::sqrt(var + 1e-8);
        for (std::size_t o = 0; o < hd; ++o) {
            for (std::size_t t = 0; t < t_len; ++t) {
                const double zn = (z[o * t_len + t] - mean) * inv * gamma[o] + beta[o];
                h[o * t_len + t] += std::tanh(zn);
            }
        }
    }

    const auto& w = values(weights_, "mask.out.weight");
    const auto& b = values(weights_, "mask.out.bias");
    Tensor out(sc, t_len, u.rate);
    for (std::size_t o = 0; o < sc; ++o) {
        const std::size_t ch = o % c_len;
        for (std::size_t t = 0; t < t_len; ++t) {
            double acc = b[o];
            for (std::size_t i = 0; i < hd; ++i) acc += w[o * hd + i] * h[i * t_len + t];
            out.at(o, t) = u.at(ch, t) * sigmoid(acc);
        }
    }
    return out;
}

Tensor Model::mask_linear(const Latent& u) const {
    const std::size_t c_len = spec_.encoder.channels;
    const std::size_t sc = spec_.mask.sources * c_len;
    const auto& w = values(weights_, "mask.linear.weight");
    const long tl = static_cast<long>(u.cols);
    Tensor out(sc, u.cols, u.rate);
    for (std::size_t o = 0; o < sc; ++o) {
        for (long t = 0; t < tl; ++t) {
            double acc = 0.0;
            for (std::size_t i = 0; i < c_len; ++i) {
                const float* wk = w.data() + (o * c_len + i) * 3;
                for (long tap = 0; tap < 3; ++tap) {
                    const long src = t + tap - 1;
                    if (src >= 0 && src < tl) acc += wk[tap] * u.at(i, static_cast<std::size_t>(src));
                }
            }
            out.at(o, static_cast<std::size_t>(t)) = acc;
        }
    }
    return out;
}

Tensor Model::decode(const Tensor& v) const {
    const auto& e = spec_.encoder;
    if (v.rows == 0 || v.rows % e.channels != 0) {
        throw std::invalid_argument("decoder expects a multiple of " + std::to_string(e.channels) +
                                    " latent rows, got " + std::to_string(v.rows));
    }
    if (v.cols == 0) {
        throw std::invalid_argument("decoder input has no frames");
    }
    const std::size_t n_src = v.rows / e.channels;
    Tensor y(n_src, samples_for(v.cols), v.rate * static_cast<double>(e.hop));
    for (std::size_t s = 0; s < n_src; ++s) {
        double* ys = y.data.data() + s * y.cols;
        for (std::size_t c = 0; c < e.channels; ++c) {
            const double* w = dec_kernels_.data() + c * e.kernel;
            for (std::size_t t = 0; t < v.cols; ++t) {
                const double a = v.at(s * e.channels + c, t);
                if (a == 0.0) continue;
                double* dst = ys + t * e.hop;
                for (std::size_t k = 0; k < e.kernel; ++k) dst[k] += a * w[k];
            }
        }
        if (dec_bias_ != 0.0) {
            for (std::size_t i = 0; i < y.cols; ++i) ys[i] += dec_bias_;
        }
    }
    return y;
}

Latent encoder_forward(const Signal& x, const Model& model) {
    return model.encode(to_tensor(x));
}

Tensor mask_forward(const Latent& u, const Model& model) {
    return model.mask(u);
}

Signal decoder_forward(const Latent& v, const Model& model) {
    return row_signal(model.decode(v), 0);
}

std::vector<Signal> model_forward(const Signal& x, const Model& model) {
    const Tensor y = model.forward(to_tensor(x));
    std::vector<Signal> out;
    for (std::size_t s = 0; s < y.rows; ++s) out.push_back(row_signal(y, s));
    return out;
}

Signal no_mask_forward(const Signal& x, const Model& model) {
    return row_signal(model.forward_no_mask(to_tensor(x)), 0);
}

std::uint64_t checksum(const Tensor& t) {
    std::uint64_t h = 1469598103934665603ull;
    for (double v : t.data) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace sfi
