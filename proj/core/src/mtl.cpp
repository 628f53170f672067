#include "nnreg/mtl.hpp"

#include <string>

#include "nnreg/errors.hpp"
#include "nnreg/rng.hpp"

namespace nnreg {

namespace {

// Stream tags keeping shuffle and corruption draws independent.
constexpr std::uint64_t kShuffleStream = 0x5A31;
constexpr std::uint64_t kCorruptStream = 0x5A32;

void require_dims(const MtlDims& d) {
    if (d.input < 1 || d.input_code < 1 || d.link_hidden < 1 || d.output_code < 1 || d.output < 1) {
        throw ConfigError("mtl dims must all be >= 1");
    }
}

} // namespace

MtlNetwork::MtlNetwork(const MtlDims& dims, std::uint64_t seed) : dims_(dims) {
    require_dims(dims);
    encoder_ = init_weights({{dims.input, dims.input_code, Activation::Sigmoid}}, derive_seed(seed, 1));
    input_decoder_ = init_weights({{dims.input_code, dims.input, Activation::Sigmoid}}, derive_seed(seed, 2));
    link_ = init_weights({{dims.input_code, dims.link_hidden, Activation::Sigmoid},
                          {dims.link_hidden, dims.output_code, Activation::Sigmoid}},
                         derive_seed(seed, 3));
    output_encoder_ = init_weights({{dims.output, dims.output_code, Activation::Sigmoid}}, derive_seed(seed, 4));
    output_decoder_ = init_weights({{dims.output_code, dims.output, Activation::Tanh}}, derive_seed(seed, 5));
}

Matrix2D MtlNetwork::predict(const Matrix2D& x) const {
    const Matrix2D code = forward(encoder_, x).output();
    const Matrix2D linked = forward(link_, code).output();
    return forward(output_decoder_, linked).output();
}

Matrix2D MtlNetwork::reconstruct_input(const Matrix2D& x) const {
    return forward(input_decoder_, forward(encoder_, x).output()).output();
}

Matrix2D MtlNetwork::reconstruct_output(const Matrix2D& y) const {
    return forward(output_decoder_, forward(output_encoder_, y).output()).output();
}

std::vector<Matrix2D> MtlNetwork::snapshot() const {
    std::vector<Matrix2D> all;
    for (const Network* seg : {&encoder_, &input_decoder_, &link_, &output_encoder_, &output_decoder_}) {
        for (const Matrix2D& w : seg->weights()) all.push_back(w);
    }
    return all;
}

void MtlNetwork::restore(const std::vector<Matrix2D>& snapshot) {
    std::size_t i = 0;
    for (Network* seg : {&encoder_, &input_decoder_, &link_, &output_encoder_, &output_decoder_}) {
        for (Matrix2D& w : seg->weights()) {
            if (i >= snapshot.size() || !w.same_shape(snapshot[i])) {
                throw ShapeError("mtl restore: snapshot does not match this network");
            }
            w = snapshot[i++];
        }
    }
    if (i != snapshot.size()) throw ShapeError("mtl restore: snapshot has extra weights");
}

std::size_t TriModalDataset::supervised_count() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += (s.has_input && s.has_label) ? 1 : 0;
    return n;
}

std::size_t TriModalDataset::feature_count() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.has_input ? 1 : 0;
    return n;
}

std::size_t TriModalDataset::label_count() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.has_label ? 1 : 0;
    return n;
}

TriModalDataset make_trimodal(Matrix2D inputs, Matrix2D targets, double feature_only_fraction,
                              double label_only_fraction, std::uint64_t seed) {
    if (inputs.rows() != targets.rows()) {
        throw ShapeError("make_trimodal: inputs and targets must have the same row count");
    }
    if (feature_only_fraction < 0.0 || label_only_fraction < 0.0 ||
        feature_only_fraction + label_only_fraction > 1.0) {
        throw ConfigError("make_trimodal: fractions must be >= 0 and sum to <= 1");
    }
    const std::size_t n = inputs.rows();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = derive_rng(seed, 0x7D1);
    rng.shuffle(order);

    const auto n_feat = static_cast<std::size_t>(feature_only_fraction * static_cast<double>(n));
    const auto n_lab = static_cast<std::size_t>(label_only_fraction * static_cast<double>(n));

    TriModalDataset data;
    data.inputs = std::move(inputs);
    data.targets = std::move(targets);
    data.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        TriModalSample s;
        s.row = order[i];
        s.has_input = i < n_feat || i >= n_feat + n_lab;
        s.has_label = i >= n_feat;
        data.samples[i] = s;
    }
    return data;
}

TriModalBatch gather_batch(const TriModalDataset& data, const std::vector<std::size_t>& sample_indices) {
    std::vector<std::size_t> sup_rows, feat_rows, lab_rows;
    for (std::size_t idx : sample_indices) {
        if (idx >= data.samples.size()) throw ShapeError("gather_batch: sample index out of range");
        const TriModalSample& s = data.samples[idx];
        if (s.has_input && s.has_label) sup_rows.push_back(s.row);
        if (s.has_input) feat_rows.push_back(s.row);
        if (s.has_label) lab_rows.push_back(s.row);
    }
    TriModalBatch batch;
    batch.x_sup = take_rows(data.inputs, sup_rows);
    batch.y_sup = take_rows(data.targets, sup_rows);
    batch.x_feat = take_rows(data.inputs, feat_rows);
    batch.y_lab = take_rows(data.targets, lab_rows);
    return batch;
}

Matrix2D corrupt_input(const Matrix2D& x, double level, std::uint64_t seed) {
    if (level < 0.0 || level >= 1.0) throw ConfigError("corrupt_input: level must be in [0,1)");
    Matrix2D out = x;
    if (level == 0.0) return out;
    Rng rng(seed);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (rng.next_double() < level) out.data()[i] = 0.0;
    }
    return out;
}

namespace {

GradientSet zero_grads(const Network& net) {
    GradientSet g;
    g.d_weights.reserve(net.layer_count());
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        g.d_weights.emplace_back(net.weight(k).rows(), net.weight(k).cols());
    }
    return g;
}

void accumulate(GradientSet& into, const GradientSet& from) {
    for (std::size_t k = 0; k < into.d_weights.size(); ++k) add_inplace(into.d_weights[k], from.d_weights[k]);
}

void validate_lambda(const LambdaTriple& lambda) {
    for (double v : {lambda.sup, lambda.in, lambda.out}) {
        if (v < 0.0 || v > 1.0) throw ConfigError("mtl: lambda components must be in [0,1]");
    }
}

} // namespace

MtlLosses mtl_criterion(const MtlNetwork& net, const TriModalBatch& batch, const LambdaTriple& lambda,
                        const Matrix2D& corrupted_x_feat) {
    validate_lambda(lambda);
    MtlLosses losses;
    if (batch.x_sup.rows() > 0) {
        losses.has_supervised = true;
        losses.supervised = loss_value(Loss::MeanSquaredError, net.predict(batch.x_sup), batch.y_sup);
    }
    if (batch.x_feat.rows() > 0) {
        if (!corrupted_x_feat.same_shape(batch.x_feat)) {
            throw ShapeError("mtl_criterion: corrupted input shape does not match x_feat");
        }
        losses.has_input = true;
        losses.input_recon =
            loss_value(Loss::MeanSquaredError, net.reconstruct_input(corrupted_x_feat), batch.x_feat);
    }
    if (batch.y_lab.rows() > 0) {
        losses.has_output = true;
        losses.output_recon = loss_value(Loss::MeanSquaredError, net.reconstruct_output(batch.y_lab), batch.y_lab);
    }
    losses.total = lambda.sup * losses.supervised + lambda.in * losses.input_recon + lambda.out * losses.output_recon;
    return losses;
}

MtlGradients mtl_backward(const MtlNetwork& net, const TriModalBatch& batch, const LambdaTriple& lambda,
                          const Matrix2D& corrupted_x_feat) {
    validate_lambda(lambda);
    MtlGradients out;
    out.encoder = zero_grads(net.encoder());
    out.input_decoder = zero_grads(net.input_decoder());
    out.link = zero_grads(net.link());
    out.output_encoder = zero_grads(net.output_encoder());
    out.output_decoder = zero_grads(net.output_decoder());

    // Supervised path: encoder -> link -> output decoder, loss sup*J_s.
    if (lambda.sup > 0.0 && batch.x_sup.rows() > 0) {
        const ForwardTrace enc_trace = forward(net.encoder(), batch.x_sup);
        const ForwardTrace link_trace = forward(net.link(), enc_trace.output());
        const ForwardTrace dec_trace = forward(net.output_decoder(), link_trace.output());

        out.losses.has_supervised = true;
        out.losses.supervised = loss_value(Loss::MeanSquaredError, dec_trace.output(), batch.y_sup);

        Matrix2D d_pred = mse_output_gradient(dec_trace.output(), batch.y_sup);
        scale_inplace(d_pred, lambda.sup);
        BackpropResult dec_bp = backprop_from_output(net.output_decoder(), dec_trace, d_pred);
        BackpropResult link_bp = backprop_from_output(net.link(), link_trace, dec_bp.input_gradient);
        BackpropResult enc_bp = backprop_from_output(net.encoder(), enc_trace, link_bp.input_gradient);
        accumulate(out.output_decoder, dec_bp.grads);
        accumulate(out.link, link_bp.grads);
        accumulate(out.encoder, enc_bp.grads);
    }

    // Input reconstruction: encoder -> input decoder on corrupted rows,
    // clean rows as target, loss in*J_in.
    if (lambda.in > 0.0 && batch.x_feat.rows() > 0) {
        if (!corrupted_x_feat.same_shape(batch.x_feat)) {
            throw ShapeError("mtl_backward: corrupted input shape does not match x_feat");
        }
        const ForwardTrace enc_trace = forward(net.encoder(), corrupted_x_feat);
        const ForwardTrace dec_trace = forward(net.input_decoder(), enc_trace.output());

        out.losses.has_input = true;
        out.losses.input_recon = loss_value(Loss::MeanSquaredError, dec_trace.output(), batch.x_feat);

        Matrix2D d_recon = mse_output_gradient(dec_trace.output(), batch.x_feat);
        scale_inplace(d_recon, lambda.in);
        BackpropResult dec_bp = backprop_from_output(net.input_decoder(), dec_trace, d_recon);
        BackpropResult enc_bp = backprop_from_output(net.encoder(), enc_trace, dec_bp.input_gradient);
        accumulate(out.input_decoder, dec_bp.grads);
        accumulate(out.encoder, enc_bp.grads);
    }

    // Output reconstruction: output encoder -> output decoder, loss out*J_out.
    if (lambda.out > 0.0 && batch.y_lab.rows() > 0) {
        const ForwardTrace enc_trace = forward(net.output_encoder(), batch.y_lab);
        const ForwardTrace dec_trace = forward(net.output_decoder(), enc_trace.output());

        out.losses.has_output = true;
        out.losses.output_recon = loss_value(Loss::MeanSquaredError, dec_trace.output(), batch.y_lab);

        Matrix2D d_recon = mse_output_gradient(dec_trace.output(), batch.y_lab);
        scale_inplace(d_recon, lambda.out);
        BackpropResult dec_bp = backprop_from_output(net.output_decoder(), dec_trace, d_recon);
        BackpropResult enc_bp = backprop_from_output(net.output_encoder(), enc_trace, dec_bp.input_gradient);
        accumulate(out.output_decoder, dec_bp.grads);
        accumulate(out.output_encoder, enc_bp.grads);
    }

    out.losses.total = lambda.sup * out.losses.supervised + lambda.in * out.losses.input_recon +
                       lambda.out * out.losses.output_recon;
    return out;
}

MtlOptimizers MtlOptimizers::make(const MtlNetwork& net, const OptimConfig& main_cfg, const OptimConfig& ae_cfg) {
    MtlOptimizers opt;
    opt.main_cfg = main_cfg;
    opt.ae_cfg = ae_cfg;
    opt.main_encoder = OptimizerState::for_network(net.encoder());
    opt.main_input_decoder = OptimizerState::for_network(net.input_decoder());
    opt.main_link = OptimizerState::for_network(net.link());
    opt.main_output_encoder = OptimizerState::for_network(net.output_encoder());
    opt.main_output_decoder = OptimizerState::for_network(net.output_decoder());
    opt.in_ae_encoder = OptimizerState::for_network(net.encoder());
    opt.in_ae_decoder = OptimizerState::for_network(net.input_decoder());
    opt.out_ae_encoder = OptimizerState::for_network(net.output_encoder());
    opt.out_ae_decoder = OptimizerState::for_network(net.output_decoder());
    return opt;
}

MtlEpochLosses train_epoch_mtl(MtlNetwork& net, const TriModalDataset& data, const ScheduleSpec& schedule,
                               MtlOptimizers& opt, std::size_t epoch, std::uint64_t seed,
                               const MtlTrainConfig& cfg) {
    if (cfg.batch_size < 1) throw ConfigError("mtl: batch_size must be >= 1");
    if (data.samples.empty()) throw ConfigError("mtl: empty dataset");

    // Lambda is refreshed once per epoch.
    const LambdaTriple lambda = schedule_eval(schedule, static_cast<double>(epoch));

    std::vector<std::size_t> order(data.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    derive_rng(seed, kShuffleStream, epoch).shuffle(order);

    MtlEpochLosses epoch_losses;
    epoch_losses.lambda = lambda;
    std::size_t sup_steps = 0, in_steps = 0, out_steps = 0;

    std::vector<std::size_t> batch_indices;
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        batch_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
        const TriModalBatch batch = gather_batch(data, batch_indices);

        // (1) input-AE step on lambda_in * J_in. Skipped entirely at weight 0
        // so the AE optimizer's decay cannot move shared weights.
        if (lambda.in > 0.0 && batch.x_feat.rows() > 0) {
            const Matrix2D corrupted =
                corrupt_input(batch.x_feat, cfg.corruption_level, derive_seed(seed, kCorruptStream, epoch * 0x10000 + b * 2));
            const ForwardTrace enc_trace = forward(net.encoder(), corrupted);
            const ForwardTrace dec_trace = forward(net.input_decoder(), enc_trace.output());
            epoch_losses.j_in += loss_value(Loss::MeanSquaredError, dec_trace.output(), batch.x_feat);
            ++in_steps;

            Matrix2D d_recon = mse_output_gradient(dec_trace.output(), batch.x_feat);
            scale_inplace(d_recon, lambda.in);
            BackpropResult dec_bp = backprop_from_output(net.input_decoder(), dec_trace, d_recon);
            BackpropResult enc_bp = backprop_from_output(net.encoder(), enc_trace, dec_bp.input_gradient);
            sgd_step(net.input_decoder(), dec_bp.grads, opt.in_ae_decoder, opt.ae_cfg);
            sgd_step(net.encoder(), enc_bp.grads, opt.in_ae_encoder, opt.ae_cfg);
        }

        // (2) output-AE step on lambda_out * J_out.
        if (lambda.out > 0.0 && batch.y_lab.rows() > 0) {
            const ForwardTrace enc_trace = forward(net.output_encoder(), batch.y_lab);
            const ForwardTrace dec_trace = forward(net.output_decoder(), enc_trace.output());
            epoch_losses.j_out += loss_value(Loss::MeanSquaredError, dec_trace.output(), batch.y_lab);
            ++out_steps;

            Matrix2D d_recon = mse_output_gradient(dec_trace.output(), batch.y_lab);
            scale_inplace(d_recon, lambda.out);
            BackpropResult dec_bp = backprop_from_output(net.output_decoder(), dec_trace, d_recon);
            BackpropResult enc_bp = backprop_from_output(net.output_encoder(), enc_trace, dec_bp.input_gradient);
            sgd_step(net.output_decoder(), dec_bp.grads, opt.out_ae_decoder, opt.ae_cfg);
            sgd_step(net.output_encoder(), enc_bp.grads, opt.out_ae_encoder, opt.ae_cfg);
        }

        // (3) joint step on J over all segments when the batch has pairs.
        if (batch.x_sup.rows() > 0) {
            Matrix2D corrupted;
            if (lambda.in > 0.0 && batch.x_feat.rows() > 0) {
                corrupted = corrupt_input(batch.x_feat, cfg.corruption_level,
                                          derive_seed(seed, kCorruptStream, epoch * 0x10000 + b * 2 + 1));
            } else {
                corrupted = batch.x_feat;
            }
            MtlGradients grads = mtl_backward(net, batch, lambda, corrupted);
            if (grads.losses.has_supervised) {
                epoch_losses.j_sup += grads.losses.supervised;
                ++sup_steps;
            }
            sgd_step(net.encoder(), grads.encoder, opt.main_encoder, opt.main_cfg);
            sgd_step(net.input_decoder(), grads.input_decoder, opt.main_input_decoder, opt.main_cfg);
            sgd_step(net.link(), grads.link, opt.main_link, opt.main_cfg);
            sgd_step(net.output_encoder(), grads.output_encoder, opt.main_output_encoder, opt.main_cfg);
            sgd_step(net.output_decoder(), grads.output_decoder, opt.main_output_decoder, opt.main_cfg);
        }
    }

    if (sup_steps > 0) epoch_losses.j_sup /= static_cast<double>(sup_steps);
    if (in_steps > 0) epoch_losses.j_in /= static_cast<double>(in_steps);
    if (out_steps > 0) epoch_losses.j_out /= static_cast<double>(out_steps);
    return epoch_losses;
}

double mtl_supervised_mse(const MtlNetwork& net, const Matrix2D& x, const Matrix2D& y) {
    return loss_value(Loss::MeanSquaredError, net.predict(x), y);
}

} // namespace nnreg
