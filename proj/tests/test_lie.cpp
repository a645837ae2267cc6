#include "sfi_lee/lie.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sfi;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double fs = 32000.0;

// Sum of random tones below 0.3 fs under a Hann taper, so the signal is
// bandlimited and supported away from the edges.
Tensor tapered(std::size_t n, std::uint64_t seed, double rate = fs) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor x(1, n, rate);
    for (int k = 0; k < 12; ++k) {
        const double f = u(rng) * 0.3 * rate, ph = u(rng) * 2 * pi, a = u(rng);
        for (std::size_t i = 0; i < n; ++i) x.data[i] += a * std::sin(2 * pi * f * static_cast<double>(i) / rate + ph);
    }
    for (std::size_t i = 0; i < n; ++i) x.data[i] *= 0.5 - 0.5 * std::cos(2 * pi * static_cast<double>(i) / (n - 1));
    return x;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    m.data = oracle::gaussian_vector(rows * cols, seed);
    for (auto& v : m.data) v /= std::sqrt(static_cast<double>(cols));
    return m;
}

ProbeMap dense_probe(const Matrix& m, double rate = fs) {
    ProbeMap f;
    f.name = "dense";
    f.fn = [m, rate](const Tensor& x) {
        Tensor y(1, m.rows, rate);
        y.data = matvec(m, x.data);
        return y;
    };
    f.input = {Space::Signal, {}};
    f.output = {Space::Signal, {}};
    f.linear = true;
    return f;
}

// (M D_in - D_out M) x with the long-double generator oracle.
std::vector<double> linear_oracle(const Matrix& m, const std::vector<double>& x, int L = 24) {
    const Matrix din = oracle::dense_derivative(m.cols, L);
    const Matrix dout = oracle::dense_derivative(m.rows, L);
    const auto a = oracle::dense_apply(m, oracle::dense_apply(din, x));
    const auto b = oracle::dense_apply(dout, oracle::dense_apply(m, x));
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

ModelSpec toy_spec() {
    ModelSpec s;
    s.id = "toy";
    s.encoder.channels = 8;
    s.encoder.kernel = 16;
    s.encoder.hop = 8;
    s.mask.hidden = 8;
    s.sigma_init = 2 * pi * 200.0;
    return s;
}

ModelSpec linear_spec() {
    ModelSpec s = toy_spec();
    s.id = "toy-linear";
    s.encoder.filter_source = FilterSource::Learned;
    s.mask.kind = MaskKind::Linear;
    return s;
}

Model unit_mask_model() {
    const ModelSpec s = toy_spec();
    WeightBundle w = init_weights(s, 3);
    force_unit_masks(w, s);
    return Model(s, w);
}

Tensor latent_noise(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed) {
    Tensor t(rows, cols, rate);
    t.data = oracle::gaussian_vector(rows * cols, seed);
    return t;
}

// Dense matrix of a linear probe, column by column.
Matrix dense_of(const ProbeMap& f, const Tensor& shape) {
    Tensor e = shape;
    std::fill(e.data.begin(), e.data.end(), 0.0);
    const std::size_t n = e.data.size();
    Matrix m;
    for (std::size_t j = 0; j < n; ++j) {
        e.data[j] = 1.0;
        const Tensor y = f(e);
        if (j == 0) m = Matrix(y.data.size(), n);
        for (std::size_t i = 0; i < y.data.size(); ++i) m(i, j) = y.data[i];
        e.data[j] = 0.0;
    }
    return m;
}

// Block-diagonal row-wise generator for a rows x cols tensor.
Matrix rowwise_derivative(std::size_t rows, std::size_t cols) {
    const Matrix d = oracle::dense_derivative(cols, 24);
    Matrix out(rows * cols, rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols; ++i) {
            for (std::size_t j = 0; j < cols; ++j) out(r * cols + i, r * cols + j) = d(i, j);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("group action: identity at r = 0 and row-wise latent action") {
    const Tensor u = latent_noise(3, 40, 2000.0, 1);
    const GroupAction lat{Space::Latent, {}};
    const Tensor same = lat.apply(0.0, u);
    CHECK(same.same_shape(u));
    CHECK(oracle::max_abs_diff(same.data, u.data) == 0.0);

    const Tensor moved = lat.apply(0.2, u);
    CHECK(moved.cols == resampled_length(0.2, 40));
    CHECK(moved.rate == doctest::Approx(std::exp(0.2) * 2000.0));
    const auto action = ResampleAction::make(0.2, 2000.0, {}, 40);
    for (std::size_t r = 0; r < 3; ++r) {
        const auto ref = sfi::apply(action, u.row(r));
        const auto got = moved.row(r);
        CHECK(oracle::max_abs_diff(ref, std::vector<double>(got.begin(), got.end())) == 0.0);
    }
}

TEST_CASE("jvp: analytic square map") {
    ProbeMap sq;
    sq.name = "square";
    sq.fn = [](const Tensor& x) {
        Tensor y = x;
        for (auto& v : y.data) v *= v;
        return y;
    };
    Tensor x(1, 2, 1.0);
    x.data = {1.0, 2.0};
    Tensor v(1, 2, 1.0);
    v.data = {1.0, 0.0};
    const Tensor j = jvp(sq, x, v);
    CHECK(j.data[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(j.data[1]) < 1e-9);
}

TEST_CASE("jvp: linear flag takes the exact path") {
    const Matrix m = random_matrix(20, 30, 4);
    const ProbeMap f = dense_probe(m);
    const Tensor x = tapered(30, 1);
    const Tensor v = tapered(30, 2);
    CHECK(jvp(f, x, v).data == f(v).data);
}

TEST_CASE("jvp: argument checks") {
    const ProbeMap f = dense_probe(random_matrix(4, 4, 1));
    const Tensor x = tapered(4, 1);
    CHECK_THROWS_AS(jvp(f, x, tapered(5, 1)), std::invalid_argument);
    CHECK_THROWS_AS(jvp(f, x, x, 0.0), std::invalid_argument);

    ProbeMap bad;
    bad.name = "bad";
    bad.fn = [](const Tensor& t) {
        Tensor y = t;
        y.data[0] = std::nan("");
        return y;
    };
    CHECK_THROWS_AS(jvp(bad, x, x), NumericalError);
}

TEST_CASE("jvp: mask predictor against the dense Jacobian") {
    const ModelSpec s = toy_spec();
    const Model m(s, init_weights(s, 5));
    const auto p = make_probes(m);
    const Tensor u = latent_noise(8, 16, fs / 8, 6);
    const Tensor v = latent_noise(8, 16, fs / 8, 7);
    const Matrix J = oracle::fd_jacobian(p.mask.fn, u, 1e-6);
    const auto expect = oracle::dense_apply(J, v.data);
    CHECK(oracle::rel_err(jvp(p.mask, u, v).data, expect) < 1e-4);
}

TEST_CASE("identity and scalar maps: finite-difference estimate is small") {
    // 1e-4 step: the truncation term of the inverse pair scales with r^2 N^2.
    LieOptions opts;
    opts.estimator = Estimator::CentralFD;
    opts.r_step = 1e-4;
    for (double a : {1.0, 3.0}) {
        ProbeMap f;
        f.name = "scale";
        f.fn = [a](const Tensor& x) {
            Tensor y = x;
            for (auto& v : y.data) v *= a;
            return y;
        };
        for (std::uint64_t seed : {1u, 2u}) {
            const Tensor x = tapered(256, seed);
            const LieEstimate e = lie_fd(f, x, opts);
            CAPTURE(a);
            CHECK(e.vector.same_shape(x));
            CHECK(norm2(e.vector) / norm2(f(x)) <= 1e-2);
            CHECK(std::isfinite(e.error_estimate));
        }
    }
}

TEST_CASE("linear closed form: both estimators") {
    // Richardson at 1e-4 keeps the r^4 remainder below 1e-6 for N <= 64.
    LieOptions fd;
    fd.estimator = Estimator::CentralFD;
    fd.r_step = 1e-4;
    const LieOptions lin;
    for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{16, 16}, {32, 32}, {48, 64}, {64, 40}}) {
        const Matrix m = random_matrix(rows, cols, rows * 100 + cols);
        const ProbeMap f = dense_probe(m);
        const Tensor x = latent_noise(1, cols, fs, cols);
        const auto expect = linear_oracle(m, x.data);
        CAPTURE(rows);
        CAPTURE(cols);
        CHECK(oracle::rel_err(lie_fd(f, x, fd).vector.data, expect) < 1e-4);
        CHECK(oracle::rel_err(lie_linearized(f, x, lin).vector.data, expect) < 1e-4);
    }
}

TEST_CASE("linearized estimator on a linear map is exact to rounding") {
    const Matrix m = random_matrix(40, 50, 9);
    const ProbeMap f = dense_probe(m);
    const Tensor x = tapered(50, 3);
    const Matrix din = build_derivative_matrix(50, fs, {});
    const Matrix dout = build_derivative_matrix(40, fs, {});
    const auto a = matvec(m, matvec(din, x.data));
    const auto b = matvec(dout, matvec(m, x.data));
    std::vector<double> expect(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) expect[i] = a[i] - b[i];
    const LieEstimate e = lie_linearized(f, x);
    CHECK(e.estimator == Estimator::Linearized);
    CHECK(e.step == 0.0);
    CHECK(oracle::rel_err(e.vector.data, expect) < 1e-13);
}

TEST_CASE("convergence order of the plain central difference") {
    const Matrix m = random_matrix(16, 16, 77);
    const ProbeMap f = dense_probe(m);
    const Tensor x = latent_noise(1, 16, fs, 78);
    const auto exact = lie_linearized(f, x).vector.data;
    std::vector<double> lx, ly;
    for (double r : {1e-2, 1e-3, 1e-4}) {
        LieOptions o;
        o.estimator = Estimator::CentralFD;
        o.richardson = false;
        o.r_step = r;
        const double e = oracle::rel_err(lie_fd(f, x, o).vector.data, exact);
        lx.push_back(std::log10(r));
        ly.push_back(std::log10(e));
    }
    const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    CAPTURE(slope);
    CHECK(std::abs(slope - 2.0) <= 0.2);
}

TEST_CASE("richardson extrapolation") {
    SUBCASE("identical estimates") {
        LieEstimate a;
        a.vector = latent_noise(2, 5, 1.0, 3);
        const LieEstimate r = richardson(a, a);
        CHECK(oracle::max_abs_diff(r.vector.data, a.vector.data) < 1e-15);
        CHECK(r.error_estimate == 0.0);
    }
    SUBCASE("cubic test function") {
        // g(r) = 1 + 2r + r^2 + 5r^3 + sin(r); g'(0) = 3, central differences err by (5 + ...)r^2.
        auto g = [](double r) { return 1 + 2 * r + r * r + 5 * r * r * r + std::sin(r); };
        auto est = [&](double r) {
            LieEstimate e;
            e.vector = Tensor(1, 1, 1.0);
            e.vector.data[0] = (g(r) - g(-r)) / (2 * r);
            e.step = r;
            return e;
        };
        const double r = 0.05;
        const LieEstimate coarse = est(r), fine = est(r / 2);
        const LieEstimate x = richardson(coarse, fine);
        const double fine_err = std::abs(fine.vector.data[0] - 3.0);
        const double x_err = std::abs(x.vector.data[0] - 3.0);
        CHECK(x_err * 10 < fine_err);
        CHECK(x.error_estimate == doctest::Approx(std::abs(fine.vector.data[0] - coarse.vector.data[0])));
    }
    SUBCASE("linear probe has a tiny error estimate") {
        // 1e-6 step: at N = 16 the r^2 term is ~1e-9 of the estimate.
        const Matrix m = random_matrix(16, 16, 5);
        const ProbeMap f = dense_probe(m);
        const Tensor x = latent_noise(1, 16, fs, 5);
        LieOptions o;
        o.estimator = Estimator::CentralFD;
        o.r_step = 1e-6;
        const LieEstimate e = lie_fd(f, x, o);
        CHECK(e.error_estimate <= 1e-8 * norm2(e.vector));
    }
    SUBCASE("shape mismatch") {
        LieEstimate a, b;
        a.vector = Tensor(1, 3, 1.0);
        b.vector = Tensor(1, 4, 1.0);
        CHECK_THROWS_AS(richardson(a, b), std::invalid_argument);
    }
}

TEST_CASE("homogeneity on linear maps") {
    const Matrix m = random_matrix(30, 30, 8);
    const ProbeMap f = dense_probe(m);
    const Tensor x = tapered(30, 8);
    const auto base = lie_linearized(f, x).vector.data;
    for (double a : {-2.0, 0.5, 10.0}) {
        const auto got = lie_linearized(scaled(f, a), x).vector.data;
        std::vector<double> expect(base);
        for (auto& v : expect) v *= a;
        CHECK(oracle::rel_err(got, expect) < 1e-14);
    }
}

TEST_CASE("lie_fd preconditions") {
    const ProbeMap f = dense_probe(random_matrix(20, 20, 1));
    const Tensor x = tapered(20, 1);
    LieOptions o;
    o.estimator = Estimator::CentralFD;
    o.r_step = 0.2;
    CHECK_THROWS_AS(lie_fd(f, x, o), std::invalid_argument);
    o.r_step = 0.0;
    CHECK_THROWS_AS(lie_fd(f, x, o), std::invalid_argument);
    o.r_step = 1e-3;
    Tensor bad = x;
    bad.data[3] = INFINITY;
    CHECK_THROWS_AS(lie_fd(f, bad, o), NumericalError);
    CHECK_THROWS_AS(lie_linearized(f, bad), NumericalError);
}

TEST_CASE("linearity flags hold for model probes") {
    for (const auto& spec : {linear_spec(), toy_spec()}) {
        const Model m(spec, init_weights(spec, 2));
        const auto p = make_probes(m);
        const Tensor x = tapered(400, 4);
        const Tensor u = p.encoder(x);
        for (const ProbeMap* f : {&p.encoder, &p.mask, &p.decoder, &p.full, &p.no_mask}) {
            if (!f->linear) continue;
            const Tensor& in = (f == &p.mask) ? u : (f == &p.decoder ? p.mask(u) : x);
            Tensor scaled_in = in;
            for (auto& v : scaled_in.data) v *= 2.5;
            std::vector<double> expect = (*f)(in).data;
            for (auto& v : expect) v *= 2.5;
            CAPTURE(f->name);
            CHECK(oracle::rel_err((*f)(scaled_in).data, expect) < 1e-14);
        }
    }
    const Model lm(linear_spec(), init_weights(linear_spec(), 2));
    CHECK(make_probes(lm).full.linear);
}

TEST_CASE("zero input on a bias-free model gives zero estimates") {
    for (const auto& spec : {toy_spec(), linear_spec()}) {
        const Model m(spec, init_weights(spec, 1));
        const auto p = make_probes(m);
        const Tensor x(1, 320, fs);
        CHECK(norm2(lie_linearized(p.full, x).vector) == 0.0);
        CHECK(norm2(lie_layer_mask(p, x).vector) == 0.0);
        const ChainTerms c = lie_chain_terms(p, x);
        CHECK(norm2(c.term_dec) == 0.0);
        CHECK(norm2(c.term_mask) == 0.0);
        CHECK(norm2(c.term_enc) == 0.0);
        CHECK(norm2(c.total) == 0.0);
        CHECK(c.residual == 0.0);
    }
}

TEST_CASE("mask derivative: unit masks are latent identity") {
    const Model m = unit_mask_model();
    const auto p = make_probes(m);
    const Tensor x = tapered(2048, 5);
    const Tensor u = p.encoder(x);
    const LieEstimate e = lie_layer_mask(p, x);
    CHECK(e.vector.rows == 2 * u.rows);
    CHECK(norm2(e.vector) / norm2(u) <= 1e-2);
}

TEST_CASE("mask derivative: linear latent map matches the closed form") {
    const ModelSpec s = linear_spec();
    const Model m(s, init_weights(s, 12));
    const auto p = make_probes(m);
    REQUIRE(p.mask.linear);
    const Tensor x = tapered(8 * 20, 6);
    const Tensor u = p.encoder(x);
    REQUIRE(u.rows * u.cols <= 16 * 20);
    const Matrix M = dense_of(p.mask, u);
    const Matrix din = rowwise_derivative(u.rows, u.cols);
    const Matrix dout = rowwise_derivative(M.rows / u.cols, u.cols);
    const auto a = oracle::dense_apply(M, oracle::dense_apply(din, u.data));
    const auto b = oracle::dense_apply(dout, oracle::dense_apply(M, u.data));
    std::vector<double> expect(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) expect[i] = a[i] - b[i];
    CHECK(oracle::rel_err(lie_layer_mask(p, x).vector.data, expect) < 1e-8);

    LieOptions fd;
    fd.estimator = Estimator::CentralFD;
    fd.r_step = 1e-4;
    CHECK(oracle::rel_err(lie_layer_mask(p, x, fd).vector.data, expect) < 1e-4);
}

TEST_CASE("chain terms: linear model") {
    const ModelSpec s = linear_spec();
    const Model m(s, init_weights(s, 4));
    const auto p = make_probes(m);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const ChainTerms c = lie_chain_terms(p, tapered(512, seed));
        CHECK(c.residual <= 1e-6);
        CHECK(c.total.same_shape(c.term_dec));
        CHECK(c.total.same_shape(c.term_mask));
        CHECK(c.total.same_shape(c.term_enc));
    }
}

TEST_CASE("chain terms: nonlinear zoo models") {
    // Finite differences use a 1e-6 step on 512 samples (see the agreement test).
    LieOptions fd;
    fd.estimator = Estimator::CentralFD;
    fd.r_step = 1e-6;
    for (const auto& spec : model_zoo()) {
        const Model m(spec, init_weights(spec, 2));
        const auto p = make_probes(m);
        for (std::uint64_t seed : {1u, 2u}) {
            const Tensor x = tapered(512, seed);
            CAPTURE(spec.id);
            CHECK(lie_chain_terms(p, x).residual <= 0.05);
            CHECK(lie_chain_terms(p, x, fd).residual <= 0.05);
        }
    }
}

TEST_CASE("estimator agreement across the zoo") {
    // Documented steps: r = 1e-6 with Richardson, jvp eps = 1e-4, N = 256.
    // The finite-difference error grows like (r N omega)^2, and ReLU kinks
    // add a term linear in r, so larger steps or longer inputs need r smaller.
    LieOptions lin;
    LieOptions fd;
    fd.estimator = Estimator::CentralFD;
    fd.r_step = 1e-6;
    for (const auto& spec : model_zoo()) {
        const Model m(spec, init_weights(spec, 1));
        const auto p = make_probes(m);
        for (std::uint64_t seed : {0u, 1u, 2u}) {
            const Tensor x = tapered(256, seed);
            for (const ProbeMap* f : {&p.full, &p.no_mask, &p.encoder}) {
                const Tensor a = lie_derivative(*f, x, lin).vector;
                const Tensor b = lie_derivative(*f, x, fd).vector;
                const double diff = norm2(axpby(1.0, a, -1.0, b));
                CAPTURE(spec.id);
                CAPTURE(f->name);
                CHECK(diff <= std::max(1e-3 * norm2(a), 1e-8));
            }
        }
    }
}

TEST_CASE("natural and pinned length policies agree on interior-supported inputs") {
    const ModelSpec s = toy_spec();
    const Model m(s, init_weights(s, 1));
    const auto p = make_probes(m);
    Tensor x(1, 400, fs);
    const Tensor core = tapered(300, 9);
    std::copy(core.data.begin(), core.data.end(), x.data.begin() + 50);
    LieOptions pinned;
    pinned.estimator = Estimator::CentralFD;
    pinned.r_step = 1e-6;
    LieOptions natural = pinned;
    natural.lengths = LengthPolicy::Natural;
    const Tensor a = lie_fd(p.no_mask, x, pinned).vector;
    const Tensor b = lie_fd(p.no_mask, x, natural).vector;
    CHECK(a.same_shape(b));
    CHECK(oracle::rel_err(b.data, a.data) < 1e-3);
}
