#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nnreg/activation.hpp"
#include "nnreg/errors.hpp"
#include "nnreg/network.hpp"
#include "nnreg/rng.hpp"
#include "testutil.hpp"

using nnreg::Activation;
using nnreg::Loss;
using nnreg::Matrix2D;

TEST_CASE("activation values and derivatives at fixed points") {
    Matrix2D z = Matrix2D::from_rows({{0.0}});
    CHECK(nnreg::apply_activation(Activation::Sigmoid, z)(0, 0) == doctest::Approx(0.5));
    CHECK(nnreg::activation_derivative(Activation::Sigmoid, z)(0, 0) == doctest::Approx(0.25));
    CHECK(nnreg::activation_derivative(Activation::Tanh, z)(0, 0) == doctest::Approx(1.0));

    // tanh(z) = 2*sigmoid(2z) - 1
    Matrix2D z7 = Matrix2D::from_rows({{0.7}});
    Matrix2D z14 = Matrix2D::from_rows({{1.4}});
    const double lhs = nnreg::apply_activation(Activation::Tanh, z7)(0, 0);
    const double rhs = 2.0 * nnreg::apply_activation(Activation::Sigmoid, z14)(0, 0) - 1.0;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    Matrix2D zr = Matrix2D::from_rows({{-2.0, 0.0, 3.0}});
    const Matrix2D relu = nnreg::apply_activation(Activation::ReLU, zr);
    CHECK(relu(0, 0) == 0.0);
    CHECK(relu(0, 2) == 3.0);
    const Matrix2D dr = nnreg::activation_derivative(Activation::ReLU, zr);
    CHECK(dr(0, 0) == 0.0);
    CHECK(dr(0, 1) == 1.0); // the kink reports the right-hand slope
    CHECK(dr(0, 2) == 1.0);

    CHECK_THROWS_AS(nnreg::activation_derivative(Activation::Softmax, zr), nnreg::UnsupportedError);
}

TEST_CASE("softmax rows are a distribution and survive large inputs") {
    Matrix2D z = Matrix2D::from_rows({{0, 0, 0}, {1000, 1000, 1001}});
    const Matrix2D p = nnreg::apply_activation(Activation::Softmax, z);
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < p.cols(); ++c) {
            CHECK(p(r, c) > 0.0);
            sum += p(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("loss values match hand computation") {
    const Matrix2D p = Matrix2D::from_rows({{0.0, 0.0}});
    const Matrix2D t = Matrix2D::from_rows({{3.0, 4.0}});
    CHECK(nnreg::loss_value(Loss::MeanSquaredError, p, t) == doctest::Approx(12.5));
    CHECK(nnreg::loss_value(Loss::MeanSquaredError, t, t) == 0.0);

    const Matrix2D onehot = Matrix2D::from_rows({{0.0, 1.0}});
    CHECK(nnreg::loss_value(Loss::CrossEntropy, onehot, onehot) == doctest::Approx(0.0));
    // Clamp keeps a certain-and-wrong prediction finite.
    const Matrix2D wrong = Matrix2D::from_rows({{1.0, 0.0}});
    CHECK(std::isfinite(nnreg::loss_value(Loss::CrossEntropy, wrong, onehot)));
}

TEST_CASE("forward matches a scalar re-computation on a 2-layer net") {
    const nnreg::Network net = nnreg::init_weights(
        {{3, 4, Activation::Tanh}, {4, 2, Activation::Sigmoid}}, 11);
    const Matrix2D x = testutil::random_matrix(5, 3, 12);
    const nnreg::ForwardTrace trace = nnreg::forward(net, x);

    // Scalar loop with explicit bias handling, written independently.
    const Matrix2D& w0 = net.weights()[0];
    const Matrix2D& w1 = net.weights()[1];
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double h[4];
        for (std::size_t j = 0; j < 4; ++j) {
            double z = w0(3, j); // bias row
            for (std::size_t i = 0; i < 3; ++i) z += x(r, i) * w0(i, j);
            h[j] = std::tanh(z);
        }
        for (std::size_t j = 0; j < 2; ++j) {
            double z = w1(4, j);
            for (std::size_t i = 0; i < 4; ++i) z += h[i] * w1(i, j);
            const double y = 1.0 / (1.0 + std::exp(-z));
            CHECK(trace.output()(r, j) == doctest::Approx(y).epsilon(1e-14));
        }
    }
}

TEST_CASE("identity layer with identity weights reproduces the input") {
    std::vector<Matrix2D> w = {Matrix2D(3, 2)};
    w[0](0, 0) = 1.0;
    w[0](1, 1) = 1.0; // last row stays zero: no bias
    nnreg::Network net({{2, 2, Activation::Identity}}, std::move(w));
    const Matrix2D x = testutil::random_matrix(4, 2, 3);
    CHECK(nnreg::forward(net, x).output() == x);
}

TEST_CASE("gradients vanish at an exact MSE fit") {
    const nnreg::Network net = nnreg::init_weights({{2, 3, Activation::Tanh}, {3, 2, Activation::Identity}}, 5);
    const Matrix2D x = testutil::random_matrix(3, 2, 6);
    const nnreg::ForwardTrace trace = nnreg::forward(net, x);
    const nnreg::GradientSet g = nnreg::backward(net, trace, Loss::MeanSquaredError, trace.output());
    for (const Matrix2D& gw : g.d_weights)
        for (std::size_t i = 0; i < gw.size(); ++i) CHECK(gw.data()[i] == 0.0);
}

TEST_CASE("fused softmax cross-entropy output gradient equals (p - y)/N") {
    const nnreg::Network net = nnreg::init_weights({{3, 4, Activation::Sigmoid}, {4, 3, Activation::Softmax}}, 21);
    const Matrix2D x = testutil::random_matrix(4, 3, 22);
    const nnreg::ForwardTrace trace = nnreg::forward(net, x);
    Matrix2D y(4, 3);
    for (std::size_t r = 0; r < 4; ++r) y(r, r % 3) = 1.0;

    const Matrix2D dz = nnreg::softmax_ce_input_gradient(trace.output(), y);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(dz(r, c) == doctest::Approx((trace.output()(r, c) - y(r, c)) / 4.0).epsilon(1e-12));
}

TEST_CASE("unsupported pairings are rejected") {
    const nnreg::Network softmax_net = nnreg::init_weights({{2, 3, Activation::Softmax}}, 1);
    const nnreg::Network plain_net = nnreg::init_weights({{2, 3, Activation::Sigmoid}}, 1);
    const Matrix2D x = testutil::random_matrix(2, 2, 2);
    Matrix2D y(2, 3);
    y(0, 0) = y(1, 1) = 1.0;

    const nnreg::ForwardTrace ts = nnreg::forward(softmax_net, x);
    CHECK_THROWS_AS(nnreg::backward(softmax_net, ts, Loss::MeanSquaredError, y), nnreg::UnsupportedError);
    const nnreg::ForwardTrace tp = nnreg::forward(plain_net, x);
    CHECK_THROWS_AS(nnreg::backward(plain_net, tp, Loss::CrossEntropy, y), nnreg::UnsupportedError);
}

TEST_CASE("initialization is deterministic with zero bias rows and near-zero mean") {
    const std::vector<nnreg::LayerSpec> specs = {{30, 40, Activation::Tanh}, {40, 20, Activation::Sigmoid}};
    const nnreg::Network a = nnreg::init_weights(specs, 77);
    const nnreg::Network b = nnreg::init_weights(specs, 77);
    CHECK(a == b);
    CHECK_FALSE(a == nnreg::init_weights(specs, 78));

    double sum = 0.0;
    std::size_t n = 0;
    for (const Matrix2D& w : a.weights()) {
        const std::size_t bias_row = w.rows() - 1;
        const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() - 1 + w.cols()));
        for (std::size_t c = 0; c < w.cols(); ++c) CHECK(w(bias_row, c) == 0.0);
        for (std::size_t r = 0; r < bias_row; ++r)
            for (std::size_t c = 0; c < w.cols(); ++c) {
                CHECK(std::abs(w(r, c)) <= bound);
                sum += w(r, c);
                ++n;
            }
    }
    CHECK(std::abs(sum / static_cast<double>(n)) < 1e-2);
}

TEST_CASE("forward_prefix and hidden_representation match the full trace") {
    const nnreg::Network net = nnreg::init_weights(
        {{3, 5, Activation::Sigmoid}, {5, 4, Activation::Tanh}, {4, 2, Activation::Softmax}}, 31);
    const Matrix2D x = testutil::random_matrix(6, 3, 32);
    const nnreg::ForwardTrace full = nnreg::forward(net, x);
    for (std::size_t k = 1; k < net.layer_count(); ++k) {
        const nnreg::ForwardTrace part = nnreg::forward_prefix(net, x, k);
        CHECK(part.post.back() == full.post[k - 1]);
        CHECK(nnreg::hidden_representation(net, x, k) == full.post[k - 1]);
    }
    CHECK_THROWS_AS(nnreg::hidden_representation(net, x, 0), nnreg::ShapeError);
    CHECK_THROWS_AS(nnreg::hidden_representation(net, x, net.layer_count()), nnreg::ShapeError);
}

TEST_CASE("prefix backprop equals the leading gradients of a full MSE pass") {
    // Cut the net after layer 2 and feed the output-side gradient by hand:
    // the prefix path must reproduce what full backprop assigns to those
    // layers.
    const nnreg::Network net = nnreg::init_weights(
        {{3, 5, Activation::Sigmoid}, {5, 4, Activation::Tanh}, {4, 2, Activation::Identity}}, 41);
    const Matrix2D x = testutil::random_matrix(4, 3, 42);
    const Matrix2D y = testutil::random_matrix(4, 2, 43);

    const nnreg::ForwardTrace full = nnreg::forward(net, x);
    const nnreg::GradientSet whole = nnreg::backward(net, full, Loss::MeanSquaredError, y);

    // d(loss)/d(post_2): identity output layer, so dz_3 = (p - y)/N and
    // d(post_2) = dz_3 * W_3^T (bias row dropped).
    const Matrix2D dz3 = nnreg::scale(nnreg::sub(full.output(), y), 1.0 / 4.0);
    const Matrix2D& w3 = net.weights()[2];
    Matrix2D w3_nobias(w3.rows() - 1, w3.cols());
    for (std::size_t r = 0; r + 1 < w3.rows(); ++r)
        for (std::size_t c = 0; c < w3.cols(); ++c) w3_nobias(r, c) = w3(r, c);
    const Matrix2D d_post2 = nnreg::matmul_bt(dz3, w3_nobias);

    const nnreg::ForwardTrace prefix = nnreg::forward_prefix(net, x, 2);
    const nnreg::BackpropResult partial = nnreg::backprop_prefix(net, prefix, d_post2, 2);
    CHECK(testutil::max_abs_diff(partial.grads.d_weights[0], whole.d_weights[0]) < 1e-15);
    CHECK(testutil::max_abs_diff(partial.grads.d_weights[1], whole.d_weights[1]) < 1e-15);
}

TEST_CASE("checkpoint round trip is bit exact") {
    const nnreg::Network net = nnreg::init_weights(
        {{7, 5, Activation::ReLU}, {5, 3, Activation::Softmax}}, 99);
    const auto path = std::filesystem::temp_directory_path() / "nnreg_test_net.ckpt";
    nnreg::save_checkpoint(net, path);
    const nnreg::Network back = nnreg::load_checkpoint(path);
    CHECK(back == net);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects garbage") {
    const auto path = std::filesystem::temp_directory_path() / "nnreg_test_bad.ckpt";
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a checkpoint", f);
    std::fclose(f);
    CHECK_THROWS_AS(nnreg::load_checkpoint(path), nnreg::FormatError);
    std::filesystem::remove(path);
}
