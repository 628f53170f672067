// Dense feedforward networks: weight layout, forward pass with retained
// trace, hand-derived backward pass, per-layer representations, checkpoints.
//
// Weights of layer k have shape (input_dim+1) x output_dim; the last row is
// the bias, matching the extended-input convention [y | 1] * W.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nnreg/activation.hpp"
#include "nnreg/matrix.hpp"

namespace nnreg {

struct LayerSpec {
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    Activation activation = Activation::Sigmoid;

    bool operator==(const LayerSpec&) const = default;
};

class Network {
public:
    Network() = default;
    Network(std::vector<LayerSpec> specs, std::vector<Matrix2D> weights);

    const std::vector<LayerSpec>& layers() const { return specs_; }
    std::size_t layer_count() const { return specs_.size(); }
    std::size_t input_dim() const { return specs_.front().input_dim; }
    std::size_t output_dim() const { return specs_.back().output_dim; }

    Matrix2D& weight(std::size_t k) { return weights_[k]; }
    const Matrix2D& weight(std::size_t k) const { return weights_[k]; }
    std::vector<Matrix2D>& weights() { return weights_; }
    const std::vector<Matrix2D>& weights() const { return weights_; }

    bool operator==(const Network&) const = default;

private:
    std::vector<LayerSpec> specs_;
    std::vector<Matrix2D> weights_;
};

// Uniform init in +-sqrt(6/(fan_in+fan_out)), zero bias rows, deterministic
// in the seed.
Network init_weights(const std::vector<LayerSpec>& specs, std::uint64_t seed);

// Everything the backward pass needs: input (y_0), and per layer the
// pre-activation z_k and post-activation y_k.
struct ForwardTrace {
    Matrix2D input;
    std::vector<Matrix2D> pre;
    std::vector<Matrix2D> post;

    const Matrix2D& output() const { return post.back(); }
};

struct GradientSet {
    std::vector<Matrix2D> d_weights;
};

ForwardTrace forward(const Network& net, const Matrix2D& batch);

// Gradients of loss_value(loss, trace.output(), target) w.r.t. every weight.
// CrossEntropy requires a Softmax output layer (fused gradient); Softmax
// with any other loss is rejected.
GradientSet backward(const Network& net, const ForwardTrace& trace, Loss loss, const Matrix2D& target);

struct BackpropResult {
    GradientSet grads;
    // d loss / d input rows, for chaining through composed networks.
    Matrix2D input_gradient;
};

BackpropResult backprop_from_loss(const Network& net, const ForwardTrace& trace, Loss loss, const Matrix2D& target);

// Backward pass seeded with d loss / d output (post-activation). Used when
// this network is an upstream segment of a composed model.
BackpropResult backprop_from_output(const Network& net, const ForwardTrace& trace, const Matrix2D& d_output);

// Forward through the first `layer_count` layers only.
ForwardTrace forward_prefix(const Network& net, const Matrix2D& batch, std::size_t layer_count);

// Backward through the first `layer_count` layers, seeded with the gradient
// w.r.t. the prefix output (post-activation). grads has layer_count entries.
BackpropResult backprop_prefix(const Network& net, const ForwardTrace& trace, const Matrix2D& d_output,
                               std::size_t layer_count);

// Post-activation of layer `layer_index` (1-based, hidden layers only).
Matrix2D hidden_representation(const Network& net, const Matrix2D& batch, std::size_t layer_index);

// Versioned little-endian binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

} // namespace nnreg
