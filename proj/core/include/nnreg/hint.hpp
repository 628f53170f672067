// Class-wise invariance regularizer: dissimilarity measures over hidden
// representations, the per-class pairwise hint penalty, the alternating
// two-optimizer training strategy, and the per-layer invariance probe.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnreg/network.hpp"
#include "nnreg/optim.hpp"

namespace nnreg {

enum class Dissimilarity { SED, NMD, AS };

Dissimilarity dissimilarity_from_name(const std::string& name);
const char* dissimilarity_name(Dissimilarity d);

// SED: sum of squared differences. NMD: mean absolute difference. AS: angle
// between the vectors, arccos of the clamped cosine; zero vectors are
// rejected as degenerate.
double dissimilarity(Dissimilarity kind, const double* a, const double* b, std::size_t dim);
double dissimilarity(Dissimilarity kind, const std::vector<double>& a, const std::vector<double>& b);

struct HintConfig {
    std::size_t layer_index = 1;                     // penalized hidden layer, in [1, K-1]
    Dissimilarity measure = Dissimilarity::SED;
    double gamma = 1.0;                              // supervised weight
    double lambda = 1.0;                             // hint weight
    std::size_t class_count = 2; // label universe; 0 skips the range check
};

// Per-class mean pairwise dissimilarity, averaged over the classes that have
// at least 2 members in the minibatch (classes with fewer contribute nothing
// and do not count toward the average):
//   J_h(x_i) = 1/(n_s - 1) * sum_{j != i, same class} C(G_i, G_j)
//   J_H      = 1/S' * sum_{s: n_s >= 2} 1/n_s * sum_i J_h(x_i)
double hint_penalty(const Matrix2D& representations, const std::vector<int>& labels, const HintConfig& cfg);

struct HintPenaltyGradient {
    double value = 0.0;
    Matrix2D d_representations;
    // AS pairs whose cosine sat within 1e-8 of +-1; their gradient
    // contribution is zeroed (arccos derivative singularity).
    std::size_t singular_pairs = 0;
};

HintPenaltyGradient hint_penalty_with_gradient(const Matrix2D& representations, const std::vector<int>& labels,
                                               const HintConfig& cfg);

// Non-empty when the penalized layer has an unbounded activation, which suits
// the penalty poorly; the training loop logs it once.
std::optional<std::string> hint_layer_warning(const Network& net, const HintConfig& cfg);

struct HintEpochLosses {
    double j_sup = 0.0;  // mean supervised cross-entropy over minibatches
    double j_hint = 0.0; // mean hint penalty over minibatches that had one
};

struct HintTrainConfig {
    std::size_t batch_size = 100;
    HintConfig hint;
};

// One epoch of the alternating strategy. Per minibatch: (1) step on
// gamma*J_sup (cross-entropy) with opt_sup updating every layer; (2) if
// lambda > 0, step on lambda*J_H with opt_hint updating only the layers up to
// the penalized one. The two optimizer states never mix. On epoch 0 an
// unbounded activation at the penalized layer is reported once to stderr.
HintEpochLosses train_epoch_hint(Network& net, const Matrix2D& inputs, const std::vector<int>& labels,
                                 const HintTrainConfig& cfg, const OptimConfig& opt_cfg_sup, OptimizerState& opt_sup,
                                 const OptimConfig& opt_cfg_hint, OptimizerState& opt_hint, std::size_t epoch,
                                 std::uint64_t seed);

// Evaluation-only per-layer hint penalty, output layer included; slot k holds
// the value for layer k+1.
std::vector<double> invariance_probe(const Network& net, const Matrix2D& inputs, const std::vector<int>& labels,
                                     Dissimilarity measure = Dissimilarity::NMD);

// One-hot encoding of labels into `class_count` columns.
Matrix2D one_hot(const std::vector<int>& labels, std::size_t class_count);

} // namespace nnreg
