#include <doctest.h>

#include "ocnav/nn.hpp"

using namespace ocnav;

namespace {

double scalar_out(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& up) {
    return up.dot(net.forward(x));
}

// Central finite differences over the flat parameter vector.
Eigen::VectorXd fd_grad(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& up,
                        double eps = 1e-5) {
    Mlp work = net;
    Eigen::VectorXd flat = flatten_parameters(net);
    Eigen::VectorXd g(flat.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        const double save = flat[i];
        flat[i] = save + eps;
        set_parameters(work, flat);
        const double hi = scalar_out(work, x, up);
        flat[i] = save - eps;
        set_parameters(work, flat);
        const double lo = scalar_out(work, x, up);
        flat[i] = save;
        g[i] = (hi - lo) / (2.0 * eps);
    }
    set_parameters(work, flat);
    return g;
}

Eigen::VectorXd flatten_tape(const GradientTape& tape) {
    Eigen::Index n = 0;
    for (const auto& l : tape.grads) n += l.W.size() + l.b.size();
    Eigen::VectorXd out(n);
    Eigen::Index at = 0;
    for (const auto& l : tape.grads) {
        // Same row-major order as flatten_parameters.
        for (Eigen::Index r = 0; r < l.W.rows(); ++r)
            for (Eigen::Index c = 0; c < l.W.cols(); ++c) out[at++] = l.W(r, c);
        for (Eigen::Index r = 0; r < l.b.size(); ++r) out[at++] = l.b[r];
    }
    return out;
}

}  // namespace

TEST_CASE("forward basics") {
    Mlp zero = Mlp::zeros({2, 4, 3});
    Eigen::VectorXd x(2);
    x << 1.0, -1.0;
    CHECK(zero.forward(x).norm() == 0.0);

    // Single linear layer with identity weights.
    Mlp id = Mlp::zeros({2, 2});
    id.layers[0].W.setIdentity();
    const Eigen::VectorXd y = id.forward(x);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == -1.0);
}

TEST_CASE("forward matches hand-rolled matrix arithmetic") {
    Rng rng(42);
    const Mlp net = Mlp::init({2, 3, 1}, rng);
    Eigen::VectorXd x(2);
    x << 0.7, -0.4;
    const Eigen::VectorXd h = (net.layers[0].W * x + net.layers[0].b).cwiseMax(0.0);
    const Eigen::VectorXd want = net.layers[1].W * h + net.layers[1].b;
    CHECK(net.forward(x)[0] == doctest::Approx(want[0]).epsilon(1e-14));
}

TEST_CASE("forward_batch agrees with forward row by row") {
    Rng rng(1);
    const Mlp net = Mlp::init({2, 8, 8, 4}, rng);
    Eigen::MatrixXd X(5, 2);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 2; ++c) X(r, c) = rng.symmetric(2);
    const Eigen::MatrixXd Y = net.forward_batch(X);
    for (int r = 0; r < 5; ++r) {
        const Eigen::VectorXd y = net.forward(X.row(r).transpose());
        CHECK((Y.row(r).transpose() - y).norm() == 0.0);
    }
}

TEST_CASE("backward trivial cases") {
    Rng rng(2);
    const Mlp net = Mlp::init({3, 5, 2}, rng);
    Eigen::VectorXd x(3);
    x << 0.1, 0.2, -0.3;
    const GradientTape zero = backward(net, x, Eigen::VectorXd::Zero(2));
    CHECK(flatten_tape(zero).norm() == 0.0);

    // y = w x: dy/dw = x * upstream.
    Mlp lin = Mlp::zeros({1, 1});
    lin.layers[0].W(0, 0) = 2.0;
    Eigen::VectorXd xi(1), up(1);
    xi << 3.0;
    up << 1.5;
    const GradientTape t = backward(lin, xi, up);
    CHECK(t.grads[0].W(0, 0) == doctest::Approx(4.5));
    CHECK(t.grads[0].b[0] == doctest::Approx(1.5));
}

namespace {

// Central differences are meaningless across a rectifier kink; require every
// hidden pre-activation to be clear of zero before using the FD oracle.
bool clear_of_kinks(const Mlp& net, const Eigen::VectorXd& x, double margin = 1e-4) {
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
        const Eigen::VectorXd z = net.layers[l].W * a + net.layers[l].b;
        if (z.cwiseAbs().minCoeff() < margin) return false;
        a = z.cwiseMax(0.0);
    }
    return true;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences (100 cases)") {
    Rng rng(100);
    for (int trial = 0; trial < 100; ++trial) {
        const Mlp net = Mlp::init({3, 6, 6, 2}, rng);
        Eigen::VectorXd x(3), up(2);
        do {
            for (int i = 0; i < 3; ++i) x[i] = rng.symmetric(2);
        } while (!clear_of_kinks(net, x));
        for (int i = 0; i < 2; ++i) up[i] = rng.symmetric(2);
        const Eigen::VectorXd analytic = flatten_tape(backward(net, x, up));
        const Eigen::VectorXd numeric = fd_grad(net, x, up);
        const double rel =
            (analytic - numeric).norm() / std::max(1e-12, numeric.norm());
        CHECK(rel < 1e-4);
    }
}

TEST_CASE("input gradients match finite differences") {
    Rng rng(55);
    const Mlp net = Mlp::init({2, 6, 1}, rng);
    Eigen::VectorXd x(2), up(1);
    x << 0.37, -0.9;
    up << 1.0;
    Eigen::VectorXd dx;
    backward(net, x, up, &dx);
    for (int i = 0; i < 2; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        const double fd = (scalar_out(net, xp, up) - scalar_out(net, xm, up)) / 2e-6;
        CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("sgd_step arithmetic") {
    Mlp net = Mlp::zeros({1, 1});
    net.layers[0].W(0, 0) = 1.0;
    GradientTape tape = GradientTape::zeros_like(net);

    sgd_step(net, tape, 0.1, 0.0);
    CHECK(net.layers[0].W(0, 0) == doctest::Approx(1.0));

    tape.grads[0].W(0, 0) = 1.0;
    sgd_step(net, tape, 0.1, 0.0);
    CHECK(net.layers[0].W(0, 0) == doctest::Approx(0.9));

    net.layers[0].W(0, 0) = 1.0;
    sgd_step(net, tape, 0.1, 0.1);
    CHECK(net.layers[0].W(0, 0) == doctest::Approx(0.89));
}

TEST_CASE("single rectifier layer with zero bias is positively homogeneous") {
    Rng rng(8);
    Mlp net = Mlp::init({3, 4}, rng);
    net.layers[0].b.setZero();
    Eigen::VectorXd x(3);
    x << 0.5, -1.2, 0.3;
    for (double s : {0.5, 2.0, 7.0}) {
        const Eigen::VectorXd ys = net.forward(x * s).cwiseMax(0.0);
        const Eigen::VectorXd y = net.forward(x).cwiseMax(0.0);
        CHECK((ys - y * s).norm() < 1e-12);
    }
}

TEST_CASE("checkpoint JSON round trip is bit-exact") {
    Rng rng(77);
    const Mlp net = Mlp::init({2, 48, 48, 1}, rng);
    const Mlp back = mlp_from_json_text(mlp_to_json(net));
    CHECK((flatten_parameters(net) - flatten_parameters(back)).norm() == 0.0);
    CHECK(mlp_to_json(back) == mlp_to_json(net));
}

TEST_CASE("initialization is deterministic in the seed") {
    Rng a(5), b(5), c(6);
    const Mlp na = Mlp::init({4, 8, 1}, a);
    const Mlp nb = Mlp::init({4, 8, 1}, b);
    const Mlp nc = Mlp::init({4, 8, 1}, c);
    CHECK((flatten_parameters(na) - flatten_parameters(nb)).norm() == 0.0);
    CHECK((flatten_parameters(na) - flatten_parameters(nc)).norm() != 0.0);
}
