#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "nnreg/activation.hpp"
#include "nnreg/errors.hpp"
#include "nnreg/mtl.hpp"
#include "nnreg/network.hpp"
#include "nnreg/optim.hpp"
#include "nnreg/rng.hpp"
#include "nnreg/schedule.hpp"
#include "testutil.hpp"

using nnreg::Activation;
using nnreg::LambdaTriple;
using nnreg::Matrix2D;
using nnreg::MtlDims;
using nnreg::MtlNetwork;
using nnreg::ScheduleKind;
using nnreg::ScheduleSpec;

namespace {

MtlDims small_dims() {
    MtlDims d;
    d.input = 6;
    d.input_code = 5;
    d.link_hidden = 4;
    d.output_code = 3;
    d.output = 4;
    return d;
}

double mse_loop(const Matrix2D& pred, const Matrix2D& target) {
    double acc = 0.0;
    for (std::size_t r = 0; r < pred.rows(); ++r)
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            const double d = target(r, c) - pred(r, c);
            acc += d * d;
        }
    return acc / (2.0 * static_cast<double>(pred.rows()));
}

} // namespace

TEST_CASE("schedule worked examples") {
    ScheduleSpec stairs;
    stairs.kind = ScheduleKind::Stairs;
    stairs.t1 = 100;
    LambdaTriple at50 = nnreg::schedule_eval(stairs, 50);
    CHECK(at50.sup == 0.0);
    CHECK(at50.in == 1.0);
    CHECK(at50.out == 1.0);
    LambdaTriple at100 = nnreg::schedule_eval(stairs, 100);
    CHECK(at100.sup == 1.0);
    CHECK(at100.in == 0.0);
    CHECK(at100.out == 0.0);

    ScheduleSpec abridged;
    abridged.kind = ScheduleKind::AbridgedLinear;
    abridged.t1 = 100;
    CHECK(nnreg::schedule_eval(abridged, 50).out == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(nnreg::schedule_eval(abridged, 250).out == 0.0); // clamped past t1
    CHECK(nnreg::schedule_eval(abridged, 250).sup == 1.0);

    ScheduleSpec expo;
    expo.kind = ScheduleKind::Exponential;
    expo.sigma = 40;
    CHECK(nnreg::schedule_eval(expo, 0).in == 1.0);
    CHECK(nnreg::schedule_eval(expo, 0).sup == 0.0);
    CHECK(nnreg::schedule_eval(expo, 40).in == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(nnreg::schedule_eval(expo, 4000).in < 1e-40);
}

TEST_CASE("schedule validation rejects broken specs") {
    ScheduleSpec bad;
    bad.kind = ScheduleKind::AbridgedLinear;
    bad.t1 = 0.0;
    CHECK_THROWS_AS(nnreg::validate_schedule(bad), nnreg::ConfigError);

    bad.t1 = 10.0;
    bad.sup_start = 1.0;
    bad.sup_end = 0.0; // supervised weight may not decrease
    CHECK_THROWS_AS(nnreg::validate_schedule(bad), nnreg::ConfigError);

    ScheduleSpec drifting;
    drifting.kind = ScheduleKind::Stairs;
    drifting.t1 = 10.0;
    drifting.in_start = 0.7; // stairs must keep sup + secondary == 1
    CHECK_THROWS_AS(nnreg::validate_schedule(drifting), nnreg::ConfigError);

    ScheduleSpec negative;
    negative.kind = ScheduleKind::Exponential;
    negative.sigma = 0.0;
    CHECK_THROWS_AS(nnreg::validate_schedule(negative), nnreg::ConfigError);
}

TEST_CASE("trimodal split respects fractions and visibility structure") {
    const Matrix2D x = testutil::random_matrix(20, 6, 1, 0.0, 1.0);
    const Matrix2D y = testutil::random_matrix(20, 4, 2);
    const nnreg::TriModalDataset data = nnreg::make_trimodal(x, y, 0.25, 0.25, 9);
    CHECK(data.samples.size() == 20);
    CHECK(data.feature_count() == 15);    // 5 feature-only + 10 supervised
    CHECK(data.label_count() == 15);      // 5 label-only + 10 supervised
    CHECK(data.supervised_count() == 10);

    // Every underlying row appears exactly once.
    std::vector<int> seen(20, 0);
    for (const auto& s : data.samples) ++seen[s.row];
    for (int v : seen) CHECK(v == 1);

    // Deterministic in the seed.
    const nnreg::TriModalDataset again = nnreg::make_trimodal(x, y, 0.25, 0.25, 9);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(again.samples[i].row == data.samples[i].row);
        CHECK(again.samples[i].has_input == data.samples[i].has_input);
    }

    CHECK_THROWS_AS(nnreg::make_trimodal(x, y, 0.7, 0.7, 9), nnreg::ConfigError);
}

TEST_CASE("gather_batch splits a batch by visibility") {
    const Matrix2D x = testutil::random_matrix(10, 3, 3, 0.0, 1.0);
    const Matrix2D y = testutil::random_matrix(10, 2, 4);
    const nnreg::TriModalDataset data = nnreg::make_trimodal(x, y, 0.3, 0.3, 5);
    std::vector<std::size_t> all(10);
    for (std::size_t i = 0; i < 10; ++i) all[i] = i;
    const nnreg::TriModalBatch batch = nnreg::gather_batch(data, all);
    CHECK(batch.x_sup.rows() == 4);
    CHECK(batch.y_sup.rows() == 4);
    CHECK(batch.x_feat.rows() == 7);
    CHECK(batch.y_lab.rows() == 7);
}

TEST_CASE("corruption zeroes the stated fraction and nothing else") {
    const Matrix2D x = testutil::random_matrix(100, 1000, 6, 0.1, 1.0); // entries never zero
    CHECK(nnreg::corrupt_input(x, 0.0, 1) == x);
    CHECK_THROWS_AS(nnreg::corrupt_input(x, 1.0, 1), nnreg::ConfigError);

    const Matrix2D corrupted = nnreg::corrupt_input(x, 0.2, 1);
    std::size_t zeroed = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (corrupted.data()[i] == 0.0) {
            ++zeroed;
        } else {
            CHECK(corrupted.data()[i] == x.data()[i]); // surviving entries untouched
        }
    }
    const double fraction = static_cast<double>(zeroed) / static_cast<double>(x.size());
    CHECK(fraction > 0.19);
    CHECK(fraction < 0.21);

    CHECK(nnreg::corrupt_input(x, 0.2, 1) == corrupted);
    CHECK_FALSE(nnreg::corrupt_input(x, 0.2, 2) == corrupted);
}

TEST_CASE("weighted criterion equals scalar-loop sub-losses") {
    const MtlNetwork net(small_dims(), 31);
    nnreg::Rng rng(32);
    Matrix2D x(3, 6), y(3, 4);
    testutil::fill_uniform(x, rng, 0.0, 1.0);
    testutil::fill_uniform(y, rng, -1.0, 1.0);

    nnreg::TriModalBatch batch;
    batch.x_sup = x;
    batch.y_sup = y;
    batch.x_feat = x;
    batch.y_lab = y;
    const Matrix2D corrupted = nnreg::corrupt_input(x, 0.2, 33);

    const LambdaTriple lambda{0.6, 0.3, 0.8};
    const nnreg::MtlLosses losses = nnreg::mtl_criterion(net, batch, lambda, corrupted);

    // Reference: chain the segments and sum squared errors by hand.
    const Matrix2D pred =
        nnreg::forward(net.output_decoder(), nnreg::forward(net.link(), nnreg::forward(net.encoder(), x).output()).output())
            .output();
    const Matrix2D x_rec = nnreg::forward(net.input_decoder(), nnreg::forward(net.encoder(), corrupted).output()).output();
    const Matrix2D y_rec = nnreg::forward(net.output_decoder(), nnreg::forward(net.output_encoder(), y).output()).output();

    CHECK(losses.supervised == doctest::Approx(mse_loop(pred, y)).epsilon(1e-14));
    CHECK(losses.input_recon == doctest::Approx(mse_loop(x_rec, x)).epsilon(1e-14));
    CHECK(losses.output_recon == doctest::Approx(mse_loop(y_rec, y)).epsilon(1e-14));
    const double total =
        0.6 * losses.supervised + 0.3 * losses.input_recon + 0.8 * losses.output_recon;
    CHECK(losses.total == doctest::Approx(total).epsilon(1e-14));

    // lambda (1,0,0) makes the criterion exactly the supervised loss.
    const nnreg::MtlLosses sup_only = nnreg::mtl_criterion(net, batch, {1.0, 0.0, 0.0}, corrupted);
    CHECK(sup_only.total == sup_only.supervised);

    // Empty feature subset: sub-loss flagged off and zero.
    nnreg::TriModalBatch no_x = batch;
    no_x.x_feat = Matrix2D(0, 6);
    const nnreg::MtlLosses partial = nnreg::mtl_criterion(net, no_x, lambda, Matrix2D(0, 6));
    CHECK_FALSE(partial.has_input);
    CHECK(partial.input_recon == 0.0);
}

TEST_CASE("segments share storage with the training views") {
    MtlNetwork net(small_dims(), 41);
    const Matrix2D x = testutil::random_matrix(2, 6, 42, 0.0, 1.0);
    const Matrix2D before = net.predict(x);
    net.encoder().weights()[0](0, 0) += 0.5;
    const Matrix2D edited = net.predict(x);
    CHECK_FALSE(edited == before); // prediction sees the encoder edit

    const std::vector<Matrix2D> snap = net.snapshot();
    net.link().weights()[1](0, 0) += 1.0;
    CHECK_FALSE(net.predict(x) == edited);
    net.restore(snap);
    CHECK(net.predict(x) == edited); // snapshot/restore is bit exact
}

TEST_CASE("feature-only data never moves the prediction-only segments") {
    MtlNetwork net(small_dims(), 51);
    const Matrix2D x = testutil::random_matrix(12, 6, 52, 0.0, 1.0);
    const Matrix2D y = testutil::random_matrix(12, 4, 53);
    const nnreg::TriModalDataset data = nnreg::make_trimodal(x, y, 1.0, 0.0, 54);
    CHECK(data.supervised_count() == 0);

    const Matrix2D link_before = net.link().weights()[0];
    const Matrix2D out_enc_before = net.output_encoder().weights()[0];
    const Matrix2D out_dec_before = net.output_decoder().weights()[0];
    const Matrix2D enc_before = net.encoder().weights()[0];

    ScheduleSpec sched;
    sched.kind = ScheduleKind::AbridgedLinear;
    sched.t1 = 10;
    nnreg::OptimConfig main_cfg, ae_cfg;
    main_cfg.learning_rate = 0.1;
    ae_cfg.learning_rate = 0.1;
    nnreg::MtlOptimizers opt = nnreg::MtlOptimizers::make(net, main_cfg, ae_cfg);
    nnreg::MtlTrainConfig cfg;
    cfg.batch_size = 4;
    nnreg::train_epoch_mtl(net, data, sched, opt, 0, 99, cfg);

    CHECK(net.link().weights()[0] == link_before);
    CHECK(net.output_encoder().weights()[0] == out_enc_before);
    CHECK(net.output_decoder().weights()[0] == out_dec_before);
    CHECK_FALSE(net.encoder().weights()[0] == enc_before); // input AE did train
}

TEST_CASE("zero reconstruction weights reduce training to the plain supervised path") {
    // Run the full multi-task epoch loop with lambda_in = lambda_out = 0 and
    // an aggressively decaying auto-encoder optimizer: the trajectory must be
    // bit-identical to plain supervised training of the stacked
    // encoder/link/decoder network, proving both the run-pair equivalence and
    // that skipped steps cannot leak decay into shared weights.
    const MtlDims dims = small_dims();
    MtlNetwork net(dims, 61);
    nnreg::Rng rng(62);
    Matrix2D x(23, 6), y(23, 4);
    testutil::fill_uniform(x, rng, 0.0, 1.0);
    testutil::fill_uniform(y, rng, -1.0, 1.0);
    const nnreg::TriModalDataset data = nnreg::make_trimodal(x, y, 0.0, 0.0, 63);

    // Stacked copy of the prediction path, before any training.
    std::vector<Matrix2D> stacked_weights = {net.encoder().weights()[0], net.link().weights()[0],
                                             net.link().weights()[1], net.output_decoder().weights()[0]};
    nnreg::Network plain({{dims.input, dims.input_code, Activation::Sigmoid},
                          {dims.input_code, dims.link_hidden, Activation::Sigmoid},
                          {dims.link_hidden, dims.output_code, Activation::Sigmoid},
                          {dims.output_code, dims.output, Activation::Tanh}},
                         std::move(stacked_weights));

    const Matrix2D input_dec_before = net.input_decoder().weights()[0];
    const Matrix2D output_enc_before = net.output_encoder().weights()[0];

    ScheduleSpec sup_only;
    sup_only.kind = ScheduleKind::AbridgedLinear;
    sup_only.t1 = 1.0;
    sup_only.sup_start = 1.0;
    sup_only.in_start = 0.0;
    sup_only.out_start = 0.0;

    nnreg::OptimConfig main_cfg;
    main_cfg.learning_rate = 0.05;
    main_cfg.momentum = 0.9;
    nnreg::OptimConfig ae_cfg;
    ae_cfg.learning_rate = 0.3;
    ae_cfg.momentum = 0.5;
    ae_cfg.l2_alpha = 0.1; // would visibly shrink shared weights if it leaked
    nnreg::MtlOptimizers opt = nnreg::MtlOptimizers::make(net, main_cfg, ae_cfg);
    nnreg::MtlTrainConfig cfg;
    cfg.batch_size = 5;

    const std::uint64_t run_seed = 777;
    for (std::size_t epoch = 0; epoch < 3; ++epoch) nnreg::train_epoch_mtl(net, data, sup_only, opt, epoch, run_seed, cfg);

    // Plain supervised reference: same shuffle stream, same batches, same
    // optimizer math on the stacked network.
    nnreg::OptimizerState st = nnreg::OptimizerState::for_network(plain);
    for (std::size_t epoch = 0; epoch < 3; ++epoch) {
        std::vector<std::size_t> order(data.samples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        nnreg::derive_rng(run_seed, 0x5A31, epoch).shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> rows;
            for (std::size_t i = start; i < stop; ++i) rows.push_back(data.samples[order[i]].row);
            const Matrix2D xb = nnreg::take_rows(data.inputs, rows);
            const Matrix2D yb = nnreg::take_rows(data.targets, rows);
            const nnreg::ForwardTrace trace = nnreg::forward(plain, xb);
            nnreg::BackpropResult bp = nnreg::backprop_from_loss(plain, trace, nnreg::Loss::MeanSquaredError, yb);
            nnreg::sgd_step(plain, bp.grads, st, main_cfg);
        }
    }

    CHECK(net.encoder().weights()[0] == plain.weights()[0]);
    CHECK(net.link().weights()[0] == plain.weights()[1]);
    CHECK(net.link().weights()[1] == plain.weights()[2]);
    CHECK(net.output_decoder().weights()[0] == plain.weights()[3]);
    // The idle segments kept their exact initial weights.
    CHECK(net.input_decoder().weights()[0] == input_dec_before);
    CHECK(net.output_encoder().weights()[0] == output_enc_before);
}

TEST_CASE("full epoch training is deterministic in the seed") {
    const MtlDims dims = small_dims();
    const Matrix2D x = testutil::random_matrix(16, 6, 71, 0.0, 1.0);
    const Matrix2D y = testutil::random_matrix(16, 4, 72);

    auto run = [&]() {
        MtlNetwork net(dims, 73);
        const nnreg::TriModalDataset data = nnreg::make_trimodal(x, y, 0.25, 0.25, 74);
        ScheduleSpec sched;
        sched.kind = ScheduleKind::Linear;
        sched.t1 = 4;
        nnreg::OptimConfig main_cfg, ae_cfg;
        main_cfg.learning_rate = 0.01;
        main_cfg.momentum = 0.9;
        ae_cfg.learning_rate = 0.01;
        ae_cfg.l2_alpha = 0.01;
        nnreg::MtlOptimizers opt = nnreg::MtlOptimizers::make(net, main_cfg, ae_cfg);
        nnreg::MtlTrainConfig cfg;
        cfg.batch_size = 4;
        nnreg::MtlEpochLosses last;
        for (std::size_t e = 0; e < 4; ++e) last = nnreg::train_epoch_mtl(net, data, sched, opt, e, 555, cfg);
        return std::make_pair(net.snapshot(), last);
    };

    const auto [snap_a, losses_a] = run();
    const auto [snap_b, losses_b] = run();
    CHECK(snap_a == snap_b);
    CHECK(losses_a.j_sup == losses_b.j_sup);
    CHECK(losses_a.j_in == losses_b.j_in);
    CHECK(losses_a.j_out == losses_b.j_out);

    // Loss bookkeeping reports the scheduled lambda of the epoch.
    CHECK(losses_a.lambda.sup == doctest::Approx(3.0 / 4.0));
}

TEST_CASE("joint gradients move every segment the supervised path touches") {
    const MtlNetwork net(small_dims(), 81);
    nnreg::Rng rng(82);
    Matrix2D x(4, 6), y(4, 4);
    testutil::fill_uniform(x, rng, 0.0, 1.0);
    testutil::fill_uniform(y, rng, -1.0, 1.0);
    nnreg::TriModalBatch batch;
    batch.x_sup = x;
    batch.y_sup = y;
    batch.x_feat = x;
    batch.y_lab = y;
    const Matrix2D corrupted = nnreg::corrupt_input(x, 0.2, 83);

    const nnreg::MtlGradients g = nnreg::mtl_backward(net, batch, {1.0, 1.0, 1.0}, corrupted);
    auto nonzero = [](const nnreg::GradientSet& gs) {
        double acc = 0.0;
        for (const Matrix2D& m : gs.d_weights)
            for (std::size_t i = 0; i < m.size(); ++i) acc += std::abs(m.data()[i]);
        return acc > 0.0;
    };
    CHECK(nonzero(g.encoder));
    CHECK(nonzero(g.input_decoder));
    CHECK(nonzero(g.link));
    CHECK(nonzero(g.output_encoder));
    CHECK(nonzero(g.output_decoder));

    // Zeroed weights silence exactly the matching paths.
    const nnreg::MtlGradients sup_only = nnreg::mtl_backward(net, batch, {1.0, 0.0, 0.0}, corrupted);
    CHECK(nonzero(sup_only.encoder));
    CHECK_FALSE(nonzero(sup_only.input_decoder));
    CHECK_FALSE(nonzero(sup_only.output_encoder));
}
