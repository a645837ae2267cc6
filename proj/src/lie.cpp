#include "sfi_lee/lie.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace sfi {

namespace {

void require_finite(const Tensor& t, const std::string& what) {
    if (!all_finite(t.data)) {
        throw NumericalError("non-finite values in " + what);
    }
}

}  // namespace

Tensor GroupAction::apply(double r, const Tensor& v, std::optional<std::size_t> out_cols) const {
    const std::size_t n_out = out_cols.value_or(resampled_length(r, v.cols));
    const auto action = ResampleAction::pinned(r, v.rate > 0.0 ? v.rate : 1.0, window, v.cols, n_out);
    Tensor out(v.rows, n_out, std::exp(r) * v.rate);
    for (std::size_t i = 0; i < v.rows; ++i) {
        const auto y = sfi::apply(action, v.row(i));
        std::copy(y.begin(), y.end(), out.row(i).begin());
    }
    return out;
}

Tensor GroupAction::derivative(const Tensor& v) const {
    Tensor out(v.rows, v.cols, v.rate);
    for (std::size_t i = 0; i < v.rows; ++i) {
        const auto y = apply_derivative(v.row(i), window);
        std::copy(y.begin(), y.end(), out.row(i).begin());
    }
    return out;
}

Tensor jvp(const ProbeMap& f, const Tensor& x, const Tensor& v, double eps) {
    if (!x.same_shape(v)) {
        throw std::invalid_argument("jvp: tangent shape does not match the input");
    }
    if (!(eps > 0.0)) {
        throw std::invalid_argument("jvp: eps must be positive");
    }
    if (f.linear) {
        Tensor out = f(v);
        require_finite(out, f.name + " jvp");
        return out;
    }
    const double vn = norm2(v);
    if (vn == 0.0) {
        Tensor y = f(x);
        std::fill(y.data.begin(), y.data.end(), 0.0);
        return y;
    }
    const double xn = norm2(x);
    const double h = eps * (xn > 0.0 ? xn : 1.0) / vn;
    Tensor plus = f(axpby(1.0, x, h, v));
    Tensor minus = f(axpby(1.0, x, -h, v));
    if (!plus.same_shape(minus)) {
        throw NumericalError(f.name + ": output shape changed under a tangent perturbation");
    }
    Tensor out = axpby(0.5 / h, plus, -0.5 / h, minus);
    require_finite(out, f.name + " jvp");
    return out;
}

namespace {

Tensor conjugated(const ProbeMap& f, const Tensor& x, const Tensor& reference, double r, LengthPolicy lengths) {
    if (lengths == LengthPolicy::Pinned) {
        const Tensor moved = f.input.apply(r, x, x.cols);
        const Tensor y = f(moved);
        return fit_cols(f.output.apply(-r, y, reference.cols), reference.cols);
    }
    const Tensor moved = f.input.apply(r, x);
    const Tensor y = f(moved);
    return fit_cols(f.output.apply(-r, y), reference.cols);
}

LieEstimate central_difference(const ProbeMap& f, const Tensor& x, const Tensor& reference, double r,
                               LengthPolicy lengths) {
    const Tensor hp = conjugated(f, x, reference, r, lengths);
    const Tensor hm = conjugated(f, x, reference, -r, lengths);
    if (!hp.same_shape(reference) || !hm.same_shape(reference)) {
        throw NumericalError(f.name + ": conjugated output rows differ from the reference");
    }
    LieEstimate e;
    e.vector = axpby(0.5 / r, hp, -0.5 / r, hm);
    e.estimator = Estimator::CentralFD;
    e.step = r;
    require_finite(e.vector, f.name + " finite-difference Lie estimate");
    return e;
}

}  // namespace

LieEstimate richardson(const LieEstimate& coarse, const LieEstimate& fine) {
    if (!coarse.vector.same_shape(fine.vector)) {
        throw std::invalid_argument("richardson: estimate shapes differ");
    }
    LieEstimate out;
    out.vector = axpby(4.0 / 3.0, fine.vector, -1.0 / 3.0, coarse.vector);
    out.estimator = fine.estimator;
    out.step = fine.step;
    out.error_estimate = norm2(axpby(1.0, fine.vector, -1.0, coarse.vector));
    return out;
}

LieEstimate lie_fd(const ProbeMap& f, const Tensor& x, const LieOptions& opts) {
    if (!(opts.r_step > 0.0)) {
        throw std::invalid_argument("lie_fd: step must be positive");
    }
    if (resampled_length(opts.r_step, x.cols) - x.cols > x.cols / 10) {
        throw std::invalid_argument("lie_fd: step " + std::to_string(opts.r_step) + " too large for length " +
                                    std::to_string(x.cols));
    }
    require_finite(x, f.name + " input");
    const Tensor reference = f(x);
    const LieEstimate coarse = central_difference(f, x, reference, opts.r_step, opts.lengths);
    const LieEstimate fine = central_difference(f, x, reference, 0.5 * opts.r_step, opts.lengths);
    if (opts.richardson) {
        return richardson(coarse, fine);
    }
    LieEstimate out = coarse;
    out.error_estimate = norm2(axpby(1.0, fine.vector, -1.0, coarse.vector));
    return out;
}

LieEstimate lie_linearized(const ProbeMap& f, const Tensor& x, const LieOptions& opts) {
    require_finite(x, f.name + " input");
    const Tensor y = f(x);
    const Tensor tangent = f.input.derivative(x);
    const Tensor pushed = jvp(f, x, tangent, opts.jvp_eps);
    if (!pushed.same_shape(y)) {
        throw NumericalError(f.name + ": Jacobian-vector product shape differs from the output");
    }
    LieEstimate e;
    e.vector = axpby(1.0, pushed, -1.0, f.output.derivative(y));
    e.estimator = Estimator::Linearized;
    e.step = f.linear ? 0.0 : opts.jvp_eps;
    require_finite(e.vector, f.name + " linearised Lie estimate");
    return e;
}

LieEstimate lie_derivative(const ProbeMap& f, const Tensor& x, const LieOptions& opts) {
    return opts.estimator == Estimator::CentralFD ? lie_fd(f, x, opts) : lie_linearized(f, x, opts);
}

ModelProbes make_probes(const Model& model, const WindowSpec& window) {
    auto m = std::make_shared<const Model>(model);
    const GroupAction sig{Space::Signal, window};
    const GroupAction lat{Space::Latent, window};
    ModelProbes p;
    p.encoder = {"encoder", [m](const Tensor& x) { return m->encode(x); }, sig, lat, m->encoder_is_linear()};
    p.mask = {"mask", [m](const Tensor& u) { return m->mask(u); }, lat, lat, m->mask_is_linear()};
    p.decoder = {"decoder", [m](const Tensor& v) { return m->decode(v); }, lat, sig, m->decoder_is_linear()};
    p.full = {"model", [m](const Tensor& x) { return m->forward(x); }, sig, sig,
              m->encoder_is_linear() && m->mask_is_linear() && m->decoder_is_linear()};
    p.no_mask = {"no_mask", [m](const Tensor& x) { return m->forward_no_mask(x); }, sig, sig,
                 m->encoder_is_linear() && m->decoder_is_linear()};
    return p;
}

ProbeMap scaled(ProbeMap f, double factor) {
    auto inner = f.fn;
    f.name += "*" + std::to_string(factor);
    f.fn = [inner, factor](const Tensor& x) {
        Tensor y = inner(x);
        for (auto& v : y.data) v *= factor;
        return y;
    };
    return f;
}

LieEstimate lie_layer_mask(const ModelProbes& probes, const Tensor& x, const LieOptions& opts) {
    const Tensor u = probes.encoder(x);
    return lie_derivative(probes.mask, u, opts);
}

ChainTerms lie_chain_terms(const ModelProbes& probes, const Tensor& x, const LieOptions& opts) {
    const Tensor u = probes.encoder(x);
    const Tensor v = probes.mask(u);

    const LieEstimate l_enc = lie_derivative(probes.encoder, x, opts);
    const LieEstimate l_mask = lie_derivative(probes.mask, u, opts);
    const LieEstimate l_dec = lie_derivative(probes.decoder, v, opts);

    ChainTerms out;
    out.term_dec = l_dec.vector;
    out.term_mask = jvp(probes.decoder, v, l_mask.vector, opts.jvp_eps);
    out.term_enc = jvp(probes.decoder, v, jvp(probes.mask, u, l_enc.vector, opts.jvp_eps), opts.jvp_eps);
    out.total = lie_derivative(probes.full, x, opts).vector;

    Tensor sum = axpby(1.0, out.term_dec, 1.0, out.term_mask);
    sum = axpby(1.0, sum, 1.0, out.term_enc);
    const double diff = norm2(axpby(1.0, out.total, -1.0, sum));
    const double tn = norm2(out.total);
    out.residual = tn > 0.0 ? diff / tn : (diff == 0.0 ? 0.0 : INFINITY);
    return out;
}

}  // namespace sfi
