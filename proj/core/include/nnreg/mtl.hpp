// Multi-task structured-output training: a supervised input -> output path
// regularized by an input denoising auto-encoder and an output auto-encoder,
// with epoch-dependent importance weights and a per-minibatch training
// strategy that also digests input-only and label-only samples.
#pragma once

#include <cstdint>
#include <vector>

#include "nnreg/network.hpp"
#include "nnreg/optim.hpp"
#include "nnreg/schedule.hpp"

namespace nnreg {

struct MtlDims {
    std::size_t input = 0;       // x
    std::size_t input_code = 0;  // encoded x
    std::size_t link_hidden = 0; // hidden layer between the two codes
    std::size_t output_code = 0; // encoded y
    std::size_t output = 0;      // y
};

// Five single-storage segments. The encoder is shared by the input AE and the
// main path, the output decoder by the output AE and the main path; paths
// compose the segments, so sharing holds by construction.
//
//   main path:  encoder -> link -> output_decoder
//   input AE:   encoder -> input_decoder          (corrupted input, clean target)
//   output AE:  output_encoder -> output_decoder
//
// Hidden activations are sigmoid; the output decoder is tanh (targets in
// [-1,1]); the input decoder is sigmoid (inputs in [0,1]).
class MtlNetwork {
public:
    MtlNetwork(const MtlDims& dims, std::uint64_t seed);

    const MtlDims& dims() const { return dims_; }

    Network& encoder() { return encoder_; }
    Network& input_decoder() { return input_decoder_; }
    Network& link() { return link_; }
    Network& output_encoder() { return output_encoder_; }
    Network& output_decoder() { return output_decoder_; }
    const Network& encoder() const { return encoder_; }
    const Network& input_decoder() const { return input_decoder_; }
    const Network& link() const { return link_; }
    const Network& output_encoder() const { return output_encoder_; }
    const Network& output_decoder() const { return output_decoder_; }

    // Main path prediction.
    Matrix2D predict(const Matrix2D& x) const;
    // Input AE applied to (already corrupted, if desired) input rows.
    Matrix2D reconstruct_input(const Matrix2D& x) const;
    // Output AE applied to target rows.
    Matrix2D reconstruct_output(const Matrix2D& y) const;

    // All weights in a fixed segment order, for best-epoch snapshots.
    std::vector<Matrix2D> snapshot() const;
    void restore(const std::vector<Matrix2D>& snapshot);

private:
    MtlDims dims_;
    Network encoder_, input_decoder_, link_, output_encoder_, output_decoder_;
};

struct TriModalSample {
    bool has_input = true;
    bool has_label = true;
    std::size_t row = 0; // row into both matrices below
};

// Aligned sample store with per-sample visibility flags. The supervised set S
// is the samples with both flags, F the ones with an input, L the ones with a
// label; S is a subset of both by construction.
struct TriModalDataset {
    Matrix2D inputs;
    Matrix2D targets;
    std::vector<TriModalSample> samples;

    std::size_t supervised_count() const;
    std::size_t feature_count() const;
    std::size_t label_count() const;
};

// Splits an aligned (inputs, targets) pair into tri-modal visibility:
// feature_only_fraction of samples keep only x, label_only_fraction keep only
// y, the rest stay supervised. Deterministic in the seed.
TriModalDataset make_trimodal(Matrix2D inputs, Matrix2D targets, double feature_only_fraction,
                              double label_only_fraction, std::uint64_t seed);

// One minibatch gathered into dense matrices.
struct TriModalBatch {
    Matrix2D x_sup, y_sup; // supervised rows (paired)
    Matrix2D x_feat;       // rows with an input (clean)
    Matrix2D y_lab;        // rows with a label
};

TriModalBatch gather_batch(const TriModalDataset& data, const std::vector<std::size_t>& sample_indices);

// Each entry of x independently zeroed with probability level (masking
// corruption); deterministic in the seed.
Matrix2D corrupt_input(const Matrix2D& x, double level, std::uint64_t seed);

struct MtlLosses {
    double total = 0.0;
    double supervised = 0.0;
    double input_recon = 0.0;
    double output_recon = 0.0;
    // false when the batch had no applicable rows for the sub-loss
    bool has_supervised = false;
    bool has_input = false;
    bool has_output = false;
};

// Weighted criterion J = sup*J_s + in*J_in + out*J_out over one minibatch.
// All sub-losses are mean squared errors. corrupted_x_feat must be
// batch.x_feat after corruption (pass batch.x_feat itself to evaluate without
// corruption); the reconstruction target is always the clean x_feat.
MtlLosses mtl_criterion(const MtlNetwork& net, const TriModalBatch& batch, const LambdaTriple& lambda,
                        const Matrix2D& corrupted_x_feat);

struct MtlGradients {
    GradientSet encoder, input_decoder, link, output_encoder, output_decoder;
    MtlLosses losses;
};

// Gradient of the weighted criterion w.r.t. every segment, with shared
// segments accumulating contributions from all paths that touch them.
MtlGradients mtl_backward(const MtlNetwork& net, const TriModalBatch& batch, const LambdaTriple& lambda,
                          const Matrix2D& corrupted_x_feat);

// Optimizer bundle: the main (joint) steps own velocities for all five
// segments; each auto-encoder owns separate velocities for its two segments.
// States never mix.
struct MtlOptimizers {
    OptimConfig main_cfg;
    OptimConfig ae_cfg;
    OptimizerState main_encoder, main_input_decoder, main_link, main_output_encoder, main_output_decoder;
    OptimizerState in_ae_encoder, in_ae_decoder;
    OptimizerState out_ae_encoder, out_ae_decoder;

    static MtlOptimizers make(const MtlNetwork& net, const OptimConfig& main_cfg, const OptimConfig& ae_cfg);
};

struct MtlTrainConfig {
    std::size_t batch_size = 10;
    double corruption_level = 0.2;
};

struct MtlEpochLosses {
    LambdaTriple lambda;
    double j_sup = 0.0; // mean over joint steps
    double j_in = 0.0;  // mean over input-AE steps
    double j_out = 0.0; // mean over output-AE steps
};

// One epoch of the per-minibatch strategy: refresh lambda from the schedule,
// shuffle, then per minibatch (1) a lambda_in*J_in step on the input AE,
// (2) a lambda_out*J_out step on the output AE, (3) a joint step on J
// updating all segments. Zero-weight AE steps are skipped outright so their
// decay cannot leak into shared weights.
MtlEpochLosses train_epoch_mtl(MtlNetwork& net, const TriModalDataset& data, const ScheduleSpec& schedule,
                               MtlOptimizers& opt, std::size_t epoch, std::uint64_t seed,
                               const MtlTrainConfig& cfg);

// Supervised MSE of the main path on paired data (validation/test logging).
double mtl_supervised_mse(const MtlNetwork& net, const Matrix2D& x, const Matrix2D& y);

} // namespace nnreg
