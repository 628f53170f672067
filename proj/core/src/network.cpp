#include "nnreg/network.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "nnreg/errors.hpp"
#include "nnreg/rng.hpp"

namespace nnreg {

namespace {

void validate_specs(const std::vector<LayerSpec>& specs) {
    if (specs.empty()) throw ShapeError("network needs at least one layer");
    for (std::size_t k = 0; k < specs.size(); ++k) {
        if (specs[k].input_dim < 1 || specs[k].output_dim < 1) {
            throw ShapeError("layer " + std::to_string(k) + ": dims must be >= 1");
        }
        if (k > 0 && specs[k].input_dim != specs[k - 1].output_dim) {
            throw ShapeError("layer " + std::to_string(k) + ": input dim " + std::to_string(specs[k].input_dim) +
                             " does not chain with previous output dim " + std::to_string(specs[k - 1].output_dim));
        }
        if (specs[k].activation == Activation::Softmax && k + 1 != specs.size()) {
            throw ConfigError("softmax is only permitted on the final layer");
        }
    }
}

} // namespace

Network::Network(std::vector<LayerSpec> specs, std::vector<Matrix2D> weights)
    : specs_(std::move(specs)), weights_(std::move(weights)) {
    validate_specs(specs_);
    if (weights_.size() != specs_.size()) throw ShapeError("weight count does not match layer count");
    for (std::size_t k = 0; k < specs_.size(); ++k) {
        if (weights_[k].rows() != specs_[k].input_dim + 1 || weights_[k].cols() != specs_[k].output_dim) {
            throw ShapeError("layer " + std::to_string(k) + ": weight shape " + std::to_string(weights_[k].rows()) +
                             "x" + std::to_string(weights_[k].cols()) + " does not match spec (" +
                             std::to_string(specs_[k].input_dim + 1) + "x" + std::to_string(specs_[k].output_dim) +
                             ")");
        }
        require_finite(weights_[k], "network weights");
    }
}

Network init_weights(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
    validate_specs(specs);
    Rng rng(seed);
    std::vector<Matrix2D> weights;
    weights.reserve(specs.size());
    for (const LayerSpec& spec : specs) {
        const double bound = std::sqrt(6.0 / static_cast<double>(spec.input_dim + spec.output_dim));
        Matrix2D w(spec.input_dim + 1, spec.output_dim);
        for (std::size_t i = 0; i < spec.input_dim; ++i) {
            for (std::size_t j = 0; j < spec.output_dim; ++j) w(i, j) = rng.uniform(-bound, bound);
        }
        // bias row stays zero
        weights.push_back(std::move(w));
    }
    return Network(std::vector<LayerSpec>(specs), std::move(weights));
}

ForwardTrace forward(const Network& net, const Matrix2D& batch) {
    return forward_prefix(net, batch, net.layer_count());
}

ForwardTrace forward_prefix(const Network& net, const Matrix2D& batch, std::size_t layer_count) {
    if (layer_count < 1 || layer_count > net.layer_count()) {
        throw ShapeError("forward_prefix: layer count out of range");
    }
    if (batch.cols() != net.input_dim()) {
        throw ShapeError("forward: batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                         std::to_string(net.input_dim()));
    }
    ForwardTrace trace;
    trace.input = batch;
    trace.pre.reserve(layer_count);
    trace.post.reserve(layer_count);
    const Matrix2D* current = &trace.input;
    for (std::size_t k = 0; k < layer_count; ++k) {
        Matrix2D z = matmul(append_ones_column(*current), net.weight(k));
        trace.post.push_back(apply_activation(net.layers()[k].activation, z));
        trace.pre.push_back(std::move(z));
        current = &trace.post.back();
    }
    return trace;
}

namespace {

// Shared descent through layers [0, layer_count): d_top is the gradient
// w.r.t. the pre-activation of the top layer. Produces dW per layer and the
// gradient w.r.t. the input rows.
BackpropResult descend(const Network& net, const ForwardTrace& trace, Matrix2D d_pre, std::size_t layer_count) {
    BackpropResult result;
    result.grads.d_weights.resize(layer_count);
    for (std::size_t k = layer_count; k-- > 0;) {
        const Matrix2D& below = k == 0 ? trace.input : trace.post[k - 1];
        result.grads.d_weights[k] = matmul_at(append_ones_column(below), d_pre);

        // d w.r.t. the layer input (excluding the constant-1 column): the
        // bias row of W never receives input gradient, so drop it.
        const Matrix2D& w = net.weight(k);
        Matrix2D w_no_bias(w.rows() - 1, w.cols());
        for (std::size_t i = 0; i + 1 < w.rows(); ++i)
            for (std::size_t j = 0; j < w.cols(); ++j) w_no_bias(i, j) = w(i, j);
        Matrix2D d_below = matmul_bt(d_pre, w_no_bias);

        if (k == 0) {
            result.input_gradient = std::move(d_below);
        } else {
            d_pre = hadamard(d_below, activation_derivative(net.layers()[k - 1].activation, trace.pre[k - 1]));
        }
    }
    return result;
}

void check_trace(const Network& net, const ForwardTrace& trace, std::size_t layer_count) {
    if (trace.post.size() != layer_count || trace.pre.size() != layer_count) {
        throw ShapeError("backward: trace does not cover the requested layers");
    }
    for (std::size_t k = 0; k < layer_count; ++k) {
        if (trace.post[k].cols() != net.layers()[k].output_dim) {
            throw ShapeError("backward: trace was not produced by this network (layer " + std::to_string(k) + ")");
        }
    }
}

} // namespace

BackpropResult backprop_from_loss(const Network& net, const ForwardTrace& trace, Loss loss, const Matrix2D& target) {
    check_trace(net, trace, net.layer_count());
    if (!trace.output().same_shape(target)) {
        throw ShapeError("backward: target shape does not match network output");
    }
    const Activation out_act = net.layers().back().activation;
    Matrix2D d_pre_top;
    if (loss == Loss::CrossEntropy) {
        if (out_act != Activation::Softmax) {
            throw UnsupportedError("cross-entropy requires a softmax output layer");
        }
        d_pre_top = softmax_ce_input_gradient(trace.output(), target);
    } else {
        if (out_act == Activation::Softmax) {
            throw UnsupportedError("softmax output is only supported with cross-entropy");
        }
        Matrix2D d_post = mse_output_gradient(trace.output(), target);
        d_pre_top = hadamard(d_post, activation_derivative(out_act, trace.pre.back()));
    }
    return descend(net, trace, std::move(d_pre_top), net.layer_count());
}

GradientSet backward(const Network& net, const ForwardTrace& trace, Loss loss, const Matrix2D& target) {
    return backprop_from_loss(net, trace, loss, target).grads;
}

BackpropResult backprop_from_output(const Network& net, const ForwardTrace& trace, const Matrix2D& d_output) {
    return backprop_prefix(net, trace, d_output, net.layer_count());
}

BackpropResult backprop_prefix(const Network& net, const ForwardTrace& trace, const Matrix2D& d_output,
                               std::size_t layer_count) {
    if (layer_count < 1 || layer_count > net.layer_count()) {
        throw ShapeError("backprop_prefix: layer count out of range");
    }
    check_trace(net, trace, layer_count);
    if (!d_output.same_shape(trace.post[layer_count - 1])) {
        throw ShapeError("backprop: output gradient shape does not match trace output");
    }
    const Activation top_act = net.layers()[layer_count - 1].activation;
    if (top_act == Activation::Softmax) {
        throw UnsupportedError("cannot seed a backward pass above a softmax layer; use the fused cross-entropy path");
    }
    Matrix2D d_pre_top = hadamard(d_output, activation_derivative(top_act, trace.pre[layer_count - 1]));
    return descend(net, trace, std::move(d_pre_top), layer_count);
}

Matrix2D hidden_representation(const Network& net, const Matrix2D& batch, std::size_t layer_index) {
    if (layer_index < 1 || layer_index >= net.layer_count()) {
        throw ShapeError("hidden_representation: layer index " + std::to_string(layer_index) +
                         " outside [1, " + std::to_string(net.layer_count() - 1) + "]");
    }
    ForwardTrace trace = forward_prefix(net, batch, layer_index);
    return trace.post.back();
}

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4E4E5247; // "NNRG"
constexpr std::uint32_t kCheckpointVersion = 1;

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
    write_bytes(out, &v, sizeof(v));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw FormatError(FormatError::Kind::Truncated, "checkpoint: truncated file");
    return v;
}

} // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, "checkpoint: cannot open " + path.string() + " for writing");
    write_pod(out, kCheckpointMagic);
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<std::uint64_t>(net.layer_count()));
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const LayerSpec& spec = net.layers()[k];
        write_pod(out, static_cast<std::uint64_t>(spec.input_dim));
        write_pod(out, static_cast<std::uint64_t>(spec.output_dim));
        write_pod(out, static_cast<std::uint32_t>(spec.activation));
        const Matrix2D& w = net.weight(k);
        write_bytes(out, w.data(), w.size() * sizeof(double));
    }
    if (!out) throw FormatError(FormatError::Kind::Io, "checkpoint: write failed for " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatError::Kind::Io, "checkpoint: cannot open " + path.string());
    if (read_pod<std::uint32_t>(in) != kCheckpointMagic) {
        throw FormatError(FormatError::Kind::BadMagic, "checkpoint: bad magic in " + path.string());
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw FormatError(FormatError::Kind::BadVersion,
                          "checkpoint: unsupported version " + std::to_string(version));
    }
    const auto layer_count = read_pod<std::uint64_t>(in);
    std::vector<LayerSpec> specs;
    std::vector<Matrix2D> weights;
    for (std::uint64_t k = 0; k < layer_count; ++k) {
        LayerSpec spec;
        spec.input_dim = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
        spec.output_dim = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
        spec.activation = static_cast<Activation>(read_pod<std::uint32_t>(in));
        Matrix2D w(spec.input_dim + 1, spec.output_dim);
        in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
        if (!in) throw FormatError(FormatError::Kind::Truncated, "checkpoint: truncated weights in " + path.string());
        specs.push_back(spec);
        weights.push_back(std::move(w));
    }
    return Network(std::move(specs), std::move(weights));
}

} // namespace nnreg
