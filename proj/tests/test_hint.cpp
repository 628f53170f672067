#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nnreg/activation.hpp"
#include "nnreg/errors.hpp"
#include "nnreg/hint.hpp"
#include "nnreg/network.hpp"
#include "nnreg/optim.hpp"
#include "nnreg/rng.hpp"
#include "testutil.hpp"

using nnreg::Activation;
using nnreg::Dissimilarity;
using nnreg::HintConfig;
using nnreg::Matrix2D;
using nnreg::Network;

namespace {

// Literal transcription of the penalty definition: per sample, the mean
// dissimilarity to the other members of its class; per class with >= 2
// members, the mean over its samples; overall, the mean over those classes.
double hint_penalty_loops(const Matrix2D& reps, const std::vector<int>& labels, Dissimilarity kind,
                          std::size_t class_count) {
    double total = 0.0;
    std::size_t counted_classes = 0;
    for (std::size_t s = 0; s < class_count; ++s) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == static_cast<int>(s)) members.push_back(i);
        if (members.size() < 2) continue;
        double class_sum = 0.0;
        for (std::size_t i : members) {
            double j_h = 0.0;
            for (std::size_t j : members) {
                if (j == i) continue;
                j_h += nnreg::dissimilarity(kind, reps.row(i), reps.row(j), reps.cols());
            }
            class_sum += j_h / static_cast<double>(members.size() - 1);
        }
        total += class_sum / static_cast<double>(members.size());
        ++counted_classes;
    }
    if (counted_classes == 0) return 0.0;
    return total / static_cast<double>(counted_classes);
}

Matrix2D random_reps(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    return testutil::random_matrix(rows, cols, seed, -2.0, 2.0);
}

std::vector<int> random_labels(std::size_t n, int classes, std::uint64_t seed) {
    nnreg::Rng rng(seed);
    std::vector<int> out(n);
    for (auto& v : out) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    return out;
}

} // namespace

TEST_CASE("dissimilarity measures on hand vectors") {
    const std::vector<double> a{0.0, 0.0}, b{3.0, 4.0};
    CHECK(nnreg::dissimilarity(Dissimilarity::SED, a, b) == doctest::Approx(25.0).epsilon(1e-15));
    CHECK(nnreg::dissimilarity(Dissimilarity::NMD, a, b) == doctest::Approx(3.5).epsilon(1e-15));

    const std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
    CHECK(nnreg::dissimilarity(Dissimilarity::AS, e1, e2) ==
          doctest::Approx(std::acos(0.0)).epsilon(1e-12));
    CHECK(nnreg::dissimilarity(Dissimilarity::AS, e1, e1) == doctest::Approx(0.0));

    // Opposite vectors: clamped cosine keeps acos finite.
    const std::vector<double> neg{-1.0, 0.0};
    CHECK(nnreg::dissimilarity(Dissimilarity::AS, e1, neg) ==
          doctest::Approx(std::acos(-1.0)).epsilon(1e-12));

    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(nnreg::dissimilarity(Dissimilarity::AS, e1, zero), nnreg::DegenerateInputError);
    CHECK_THROWS_AS(nnreg::dissimilarity(Dissimilarity::SED, a, std::vector<double>{}),
                    nnreg::ShapeError);
    CHECK_THROWS_AS(nnreg::dissimilarity(Dissimilarity::SED, a, std::vector<double>{1.0}),
                    nnreg::ShapeError);
}

TEST_CASE("penalty worked example and degenerate batches") {
    // One class, 1-dim representations 0 and 2, SED: each sample's mean
    // dissimilarity to the rest is 4, the class mean is 4, so J_H = 4.
    Matrix2D reps(2, 1);
    reps(0, 0) = 0.0;
    reps(1, 0) = 2.0;
    HintConfig cfg;
    cfg.class_count = 1;
    cfg.measure = Dissimilarity::SED;
    CHECK(nnreg::hint_penalty(reps, {0, 0}, cfg) == doctest::Approx(4.0).epsilon(1e-15));

    // Identical representations cost nothing.
    Matrix2D same(3, 4, 0.7);
    HintConfig two;
    two.class_count = 2;
    CHECK(nnreg::hint_penalty(same, {0, 1, 0}, two) == 0.0);

    // Classes with a single member are excluded from the average entirely.
    Matrix2D three(3, 1);
    three(0, 0) = 0.0;
    three(1, 0) = 2.0;
    three(2, 0) = 100.0; // lone class member, must not shift the result
    CHECK(nnreg::hint_penalty(three, {0, 0, 1}, two) == doctest::Approx(4.0).epsilon(1e-15));

    // All classes singletons: penalty is zero, not a division by zero.
    CHECK(nnreg::hint_penalty(three, {0, 1, 2}, HintConfig{.class_count = 3}) == 0.0);

    CHECK_THROWS_AS(nnreg::hint_penalty(three, {0, -1, 1}, two), nnreg::ConfigError);
    CHECK_THROWS_AS(nnreg::hint_penalty(three, {0, 5, 1}, two), nnreg::ConfigError);
    CHECK_THROWS_AS(nnreg::hint_penalty(three, {0, 0}, two), nnreg::ShapeError);
}

TEST_CASE("penalty matches the double-loop transcription on random batches") {
    for (std::uint64_t trial = 0; trial < 40; ++trial) {
        const std::size_t rows = 2 + trial % 13;
        const std::size_t cols = 1 + trial % 7;
        const int classes = 1 + static_cast<int>(trial % 4);
        Matrix2D reps = random_reps(rows, cols, 900 + trial);
        // Shift away from zero so AS never sees a zero vector.
        for (std::size_t i = 0; i < reps.size(); ++i) reps.data()[i] += 3.0;
        const std::vector<int> labels = random_labels(rows, classes, 1900 + trial);
        for (Dissimilarity kind : {Dissimilarity::SED, Dissimilarity::NMD, Dissimilarity::AS}) {
            HintConfig cfg;
            cfg.measure = kind;
            cfg.class_count = static_cast<std::size_t>(classes);
            const double got = nnreg::hint_penalty(reps, labels, cfg);
            const double want = hint_penalty_loops(reps, labels, kind, cfg.class_count);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("penalty symmetry properties") {
    const std::size_t rows = 9, cols = 5;
    Matrix2D reps = random_reps(rows, cols, 77);
    for (std::size_t i = 0; i < reps.size(); ++i) reps.data()[i] += 3.0;
    const std::vector<int> labels = random_labels(rows, 3, 78);
    HintConfig cfg;
    cfg.class_count = 3;

    // Permuting the rows (and labels along with them) changes nothing.
    std::vector<std::size_t> perm(rows);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    nnreg::Rng(79).shuffle(perm);
    Matrix2D reps_p(rows, cols);
    std::vector<int> labels_p(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        labels_p[i] = labels[perm[i]];
        for (std::size_t c = 0; c < cols; ++c) reps_p(i, c) = reps(perm[i], c);
    }
    for (Dissimilarity kind : {Dissimilarity::SED, Dissimilarity::NMD, Dissimilarity::AS}) {
        cfg.measure = kind;
        const double base = nnreg::hint_penalty(reps, labels, cfg);
        CHECK(nnreg::hint_penalty(reps_p, labels_p, cfg) == doctest::Approx(base).epsilon(1e-12));
    }

    // Scaling all representations by c multiplies SED by c^2 and leaves the
    // angle measure untouched.
    const double c = 1.7;
    Matrix2D scaled = reps;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled.data()[i] *= c;
    cfg.measure = Dissimilarity::SED;
    CHECK(nnreg::hint_penalty(scaled, labels, cfg) ==
          doctest::Approx(c * c * nnreg::hint_penalty(reps, labels, cfg)).epsilon(1e-12));
    cfg.measure = Dissimilarity::AS;
    CHECK(nnreg::hint_penalty(scaled, labels, cfg) ==
          doctest::Approx(nnreg::hint_penalty(reps, labels, cfg)).epsilon(1e-12));
}

TEST_CASE("penalty gradient agrees with central differences") {
    const double h = 1e-6;
    for (Dissimilarity kind : {Dissimilarity::SED, Dissimilarity::NMD, Dissimilarity::AS}) {
        Matrix2D reps = random_reps(6, 4, 500 + static_cast<std::uint64_t>(kind));
        for (std::size_t i = 0; i < reps.size(); ++i) reps.data()[i] += 3.0;
        const std::vector<int> labels{0, 1, 0, 1, 0, 1};
        HintConfig cfg;
        cfg.measure = kind;
        cfg.class_count = 2;
        const nnreg::HintPenaltyGradient g = nnreg::hint_penalty_with_gradient(reps, labels, cfg);
        CHECK(g.value == doctest::Approx(nnreg::hint_penalty(reps, labels, cfg)));
        CHECK(g.singular_pairs == 0);
        for (std::size_t i = 0; i < reps.size(); ++i) {
            Matrix2D plus = reps, minus = reps;
            plus.data()[i] += h;
            minus.data()[i] -= h;
            const double fd = (nnreg::hint_penalty(plus, labels, cfg) -
                               nnreg::hint_penalty(minus, labels, cfg)) /
                              (2.0 * h);
            const double an = g.d_representations.data()[i];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
            CHECK(std::abs(fd - an) / denom < 1e-5);
        }
    }
}

TEST_CASE("parallel same-class pair is singular for the angle measure") {
    Matrix2D reps(2, 3);
    for (std::size_t c = 0; c < 3; ++c) {
        reps(0, c) = static_cast<double>(c + 1);
        reps(1, c) = 2.0 * static_cast<double>(c + 1); // same direction, different norm
    }
    HintConfig cfg;
    cfg.measure = Dissimilarity::AS;
    cfg.class_count = 1;
    const nnreg::HintPenaltyGradient g = nnreg::hint_penalty_with_gradient(reps, {0, 0}, cfg);
    CHECK(g.singular_pairs == 1);
    CHECK(g.value == doctest::Approx(0.0));
    for (std::size_t i = 0; i < g.d_representations.size(); ++i)
        CHECK(g.d_representations.data()[i] == 0.0);
}

TEST_CASE("one penalty step pulls two same-class points together") {
    Network net = nnreg::init_weights(
        {{3, 5, Activation::Sigmoid}, {5, 4, Activation::Sigmoid}, {4, 2, Activation::Softmax}}, 4242);
    Matrix2D x(2, 3);
    x(0, 0) = 0.9;
    x(0, 1) = 0.1;
    x(0, 2) = 0.4;
    x(1, 0) = 0.2;
    x(1, 1) = 0.8;
    x(1, 2) = 0.6;
    const std::vector<int> labels{0, 0};
    HintConfig cfg;
    cfg.layer_index = 2;
    cfg.measure = Dissimilarity::SED;
    cfg.class_count = 2;

    auto penalty_now = [&]() {
        const Matrix2D reps = nnreg::forward_prefix(net, x, cfg.layer_index).output();
        return nnreg::hint_penalty(reps, labels, cfg);
    };
    const double before = penalty_now();
    CHECK(before > 0.0);

    const nnreg::ForwardTrace trace = nnreg::forward_prefix(net, x, cfg.layer_index);
    nnreg::HintPenaltyGradient g = nnreg::hint_penalty_with_gradient(trace.output(), labels, cfg);
    nnreg::BackpropResult bp = nnreg::backprop_prefix(net, trace, g.d_representations, cfg.layer_index);
    nnreg::OptimizerState st = nnreg::OptimizerState::for_prefix(net, cfg.layer_index);
    nnreg::OptimConfig opt;
    opt.learning_rate = 0.01;
    nnreg::sgd_step_prefix(net, bp.grads, st, opt);

    CHECK(penalty_now() < before);
}

TEST_CASE("probe reports per-layer penalties and zeroes for identical inputs") {
    Network net = nnreg::init_weights(
        {{4, 6, Activation::Sigmoid}, {6, 5, Activation::Sigmoid}, {5, 3, Activation::Softmax}}, 321);
    Matrix2D x = testutil::random_matrix(8, 4, 322, 0.0, 1.0);
    const std::vector<int> labels = random_labels(8, 3, 323);

    const std::vector<double> probe = nnreg::invariance_probe(net, x, labels, Dissimilarity::SED);
    REQUIRE(probe.size() == 3);
    for (std::size_t k = 1; k <= 3; ++k) {
        const Matrix2D reps = nnreg::forward_prefix(net, x, k).output();
        HintConfig cfg;
        cfg.measure = Dissimilarity::SED;
        cfg.class_count = 3;
        CHECK(probe[k - 1] == doctest::Approx(nnreg::hint_penalty(reps, labels, cfg)).epsilon(1e-14));
    }

    // Identical samples in the same class: every layer maps them to the same
    // point, so the probe is exactly zero everywhere.
    Matrix2D twin(2, 4);
    for (std::size_t c = 0; c < 4; ++c) {
        twin(0, c) = 0.3 * static_cast<double>(c);
        twin(1, c) = 0.3 * static_cast<double>(c);
    }
    for (double v : nnreg::invariance_probe(net, twin, {1, 1}, Dissimilarity::SED)) CHECK(v == 0.0);
}

TEST_CASE("one-hot encoding and its bounds") {
    const Matrix2D oh = nnreg::one_hot({2, 0, 1}, 3);
    REQUIRE(oh.rows() == 3);
    REQUIRE(oh.cols() == 3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(oh(r, c) == ((oh(r, c) == 1.0) ? 1.0 : 0.0));
    CHECK(oh(0, 2) == 1.0);
    CHECK(oh(1, 0) == 1.0);
    CHECK(oh(2, 1) == 1.0);
    CHECK_THROWS_AS(nnreg::one_hot({3}, 3), nnreg::ConfigError);
    CHECK_THROWS_AS(nnreg::one_hot({-1}, 3), nnreg::ConfigError);
}

TEST_CASE("unbounded activations at the penalized layer draw a warning") {
    Network relu_net = nnreg::init_weights(
        {{3, 4, Activation::ReLU}, {4, 2, Activation::Softmax}}, 11);
    HintConfig cfg;
    cfg.layer_index = 1;
    CHECK(nnreg::hint_layer_warning(relu_net, cfg).has_value());

    Network sig_net = nnreg::init_weights(
        {{3, 4, Activation::Sigmoid}, {4, 2, Activation::Softmax}}, 12);
    CHECK_FALSE(nnreg::hint_layer_warning(sig_net, cfg).has_value());
}

TEST_CASE("training epoch validates its configuration") {
    Network net = nnreg::init_weights(
        {{3, 4, Activation::Sigmoid}, {4, 2, Activation::Softmax}}, 21);
    Matrix2D x = testutil::random_matrix(6, 3, 22, 0.0, 1.0);
    const std::vector<int> labels = random_labels(6, 2, 23);
    nnreg::OptimConfig oc;
    oc.learning_rate = 0.1;
    nnreg::OptimizerState sup = nnreg::OptimizerState::for_network(net);
    nnreg::OptimizerState hint = nnreg::OptimizerState::for_network(net);

    nnreg::HintTrainConfig cfg;
    cfg.batch_size = 3;
    cfg.hint.layer_index = 0; // must be a hidden layer
    CHECK_THROWS_AS(nnreg::train_epoch_hint(net, x, labels, cfg, oc, sup, oc, hint, 1, 99),
                    nnreg::ConfigError);
    cfg.hint.layer_index = 2; // the output layer does not count either
    CHECK_THROWS_AS(nnreg::train_epoch_hint(net, x, labels, cfg, oc, sup, oc, hint, 1, 99),
                    nnreg::ConfigError);
    cfg.hint.layer_index = 1;
    cfg.hint.gamma = -0.5;
    CHECK_THROWS_AS(nnreg::train_epoch_hint(net, x, labels, cfg, oc, sup, oc, hint, 1, 99),
                    nnreg::ConfigError);
    cfg.hint.gamma = 1.0;
    cfg.hint.class_count = 3; // output width is 2
    CHECK_THROWS_AS(nnreg::train_epoch_hint(net, x, labels, cfg, oc, sup, oc, hint, 1, 99),
                    nnreg::ConfigError);
    cfg.hint.class_count = 2;
    const std::vector<int> short_labels{0, 1};
    CHECK_THROWS_AS(nnreg::train_epoch_hint(net, x, short_labels, cfg, oc, sup, oc, hint, 1, 99),
                    nnreg::ShapeError);
}

TEST_CASE("zero hint weight reduces the epoch to plain supervised training") {
    // Same strategy as the multi-task equivalence check: run the alternating
    // loop with lambda = 0 and a decaying hint optimizer, then replay the
    // supervised steps by hand; the weight trajectories must coincide bitwise.
    const std::vector<nnreg::LayerSpec> specs{
        {4, 7, Activation::Sigmoid}, {7, 5, Activation::Tanh}, {5, 3, Activation::Softmax}};
    Network net = nnreg::init_weights(specs, 611);
    Network replay = net; // same starting weights
    const Matrix2D x = testutil::random_matrix(17, 4, 612, 0.0, 1.0);
    const std::vector<int> labels = random_labels(17, 3, 613);

    nnreg::OptimConfig sup_cfg;
    sup_cfg.learning_rate = 0.2;
    sup_cfg.momentum = 0.8;
    nnreg::OptimConfig hint_cfg;
    hint_cfg.learning_rate = 0.5;
    hint_cfg.l2_alpha = 0.2; // would dent the weights if a lambda=0 step ran

    nnreg::HintTrainConfig cfg;
    cfg.batch_size = 5;
    cfg.hint.layer_index = 1;
    cfg.hint.lambda = 0.0;
    cfg.hint.gamma = 0.7;
    cfg.hint.class_count = 3;
    nnreg::OptimizerState sup = nnreg::OptimizerState::for_network(net);
    nnreg::OptimizerState hint = nnreg::OptimizerState::for_prefix(net, cfg.hint.layer_index);

    const std::uint64_t run_seed = 4040;
    for (std::size_t epoch = 1; epoch <= 3; ++epoch)
        nnreg::train_epoch_hint(net, x, labels, cfg, sup_cfg, sup, hint_cfg, hint, epoch, run_seed);

    const Matrix2D targets = nnreg::one_hot(labels, 3);
    nnreg::OptimizerState replay_state = nnreg::OptimizerState::for_network(replay);
    for (std::size_t epoch = 1; epoch <= 3; ++epoch) {
        std::vector<std::size_t> order(x.rows());
        std::iota(order.begin(), order.end(), std::size_t{0});
        nnreg::derive_rng(run_seed, 0x48A1, epoch).shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(stop));
            const Matrix2D xb = nnreg::take_rows(x, idx);
            const Matrix2D yb = nnreg::take_rows(targets, idx);
            const nnreg::ForwardTrace trace = nnreg::forward(replay, xb);
            nnreg::BackpropResult bp =
                nnreg::backprop_from_loss(replay, trace, nnreg::Loss::CrossEntropy, yb);
            for (Matrix2D& m : bp.grads.d_weights)
                for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= cfg.hint.gamma;
            nnreg::sgd_step(replay, bp.grads, replay_state, sup_cfg);
        }
    }
    for (std::size_t k = 0; k < specs.size(); ++k) CHECK(net.weights()[k] == replay.weights()[k]);
}

TEST_CASE("alternating epochs are deterministic and track both losses") {
    const std::vector<nnreg::LayerSpec> specs{
        {4, 6, Activation::Sigmoid}, {6, 5, Activation::Sigmoid}, {5, 2, Activation::Softmax}};
    const Matrix2D x = testutil::random_matrix(20, 4, 711, 0.0, 1.0);
    const std::vector<int> labels = random_labels(20, 2, 712);

    auto run = [&]() {
        Network net = nnreg::init_weights(specs, 713);
        nnreg::OptimConfig oc;
        oc.learning_rate = 0.3;
        nnreg::HintTrainConfig cfg;
        cfg.batch_size = 10;
        cfg.hint.layer_index = 1;
        cfg.hint.lambda = 0.4;
        cfg.hint.class_count = 2;
        nnreg::OptimizerState sup = nnreg::OptimizerState::for_network(net);
        nnreg::OptimizerState hint = nnreg::OptimizerState::for_prefix(net, cfg.hint.layer_index);
        std::vector<nnreg::HintEpochLosses> history;
        for (std::size_t epoch = 1; epoch <= 8; ++epoch)
            history.push_back(nnreg::train_epoch_hint(net, x, labels, cfg, oc, sup, oc, hint, epoch, 714));
        return std::make_pair(net.weights(), history);
    };

    const auto [w_a, h_a] = run();
    const auto [w_b, h_b] = run();
    CHECK(w_a == w_b);
    for (std::size_t e = 0; e < h_a.size(); ++e) {
        CHECK(h_a[e].j_sup == h_b[e].j_sup);
        CHECK(h_a[e].j_hint == h_b[e].j_hint);
        CHECK(h_a[e].j_sup > 0.0);
        CHECK(h_a[e].j_hint > 0.0);
    }
    // Training moves both objectives: supervised loss drops over the run.
    CHECK(h_a.back().j_sup < h_a.front().j_sup);
}
