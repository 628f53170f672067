#include "nnreg/activation.hpp"

#include <algorithm>
#include <cmath>

#include "nnreg/errors.hpp"

namespace nnreg {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::ReLU: return "relu";
        case Activation::Softmax: return "softmax";
        case Activation::Identity: return "identity";
    }
    return "?";
}

const char* loss_name(Loss l) {
    return l == Loss::MeanSquaredError ? "mse" : "cross_entropy";
}

Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::ReLU;
    if (name == "softmax") return Activation::Softmax;
    if (name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation: " + name);
}

Loss loss_from_name(const std::string& name) {
    if (name == "mse") return Loss::MeanSquaredError;
    if (name == "cross_entropy") return Loss::CrossEntropy;
    throw ConfigError("unknown loss: " + name);
}

double sigmoid(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

namespace {

void softmax_rows(const Matrix2D& z, Matrix2D& out) {
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const double* src = z.row(i);
        double* dst = out.row(i);
        double zmax = src[0];
        for (std::size_t j = 1; j < z.cols(); ++j) zmax = std::max(zmax, src[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < z.cols(); ++j) {
            dst[j] = std::exp(src[j] - zmax);
            sum += dst[j];
        }
        for (std::size_t j = 0; j < z.cols(); ++j) dst[j] /= sum;
    }
}

} // namespace

Matrix2D apply_activation(Activation kind, const Matrix2D& z) {
    Matrix2D out(z.rows(), z.cols());
    switch (kind) {
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < z.size(); ++i) out.data()[i] = sigmoid(z.data()[i]);
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < z.size(); ++i) out.data()[i] = std::tanh(z.data()[i]);
            break;
        case Activation::ReLU:
            for (std::size_t i = 0; i < z.size(); ++i) out.data()[i] = z.data()[i] > 0.0 ? z.data()[i] : 0.0;
            break;
        case Activation::Identity:
            out = z;
            break;
        case Activation::Softmax:
            if (z.cols() < 1) throw ShapeError("softmax: needs at least one column");
            softmax_rows(z, out);
            break;
    }
    return out;
}

Matrix2D activation_derivative(Activation kind, const Matrix2D& z) {
    if (kind == Activation::Softmax) {
        throw UnsupportedError(
            "softmax has no elementwise derivative; it is fused with cross-entropy in the network backward pass");
    }
    Matrix2D out(z.rows(), z.cols());
    switch (kind) {
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double s = sigmoid(z.data()[i]);
                out.data()[i] = s * (1.0 - s);
            }
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double t = std::tanh(z.data()[i]);
                out.data()[i] = 1.0 - t * t;
            }
            break;
        case Activation::ReLU:
            // The derivative at exactly 0 is taken to be 1.
            for (std::size_t i = 0; i < z.size(); ++i) out.data()[i] = z.data()[i] >= 0.0 ? 1.0 : 0.0;
            break;
        case Activation::Identity:
            out.fill(1.0);
            break;
        case Activation::Softmax:
            break; // unreachable
    }
    return out;
}

namespace {

void require_one_hot(const Matrix2D& target) {
    for (std::size_t i = 0; i < target.rows(); ++i) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < target.cols(); ++j) {
            const double v = target(i, j);
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                throw ConfigError("cross-entropy target is not one-hot (entry neither 0 nor 1)");
            }
        }
        if (ones != 1) throw ConfigError("cross-entropy target row must contain exactly one 1");
    }
}

} // namespace

double loss_value(Loss kind, const Matrix2D& prediction, const Matrix2D& target) {
    if (!prediction.same_shape(target)) {
        throw ShapeError("loss_value: prediction " + std::to_string(prediction.rows()) + "x" +
                         std::to_string(prediction.cols()) + " vs target " + std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()));
    }
    const double n = static_cast<double>(prediction.rows());
    if (kind == Loss::MeanSquaredError) {
        double sum = 0.0;
        for (std::size_t i = 0; i < prediction.size(); ++i) {
            const double d = target.data()[i] - prediction.data()[i];
            sum += d * d;
        }
        return 0.5 * sum / n;
    }
    require_one_hot(target);
    double sum = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        if (target.data()[i] != 0.0) {
            const double p = std::clamp(prediction.data()[i], 1e-12, 1.0);
            sum -= target.data()[i] * std::log(p);
        }
    }
    return sum / n;
}

Matrix2D mse_output_gradient(const Matrix2D& prediction, const Matrix2D& target) {
    Matrix2D g = sub(prediction, target);
    scale_inplace(g, 1.0 / static_cast<double>(prediction.rows()));
    return g;
}

Matrix2D softmax_ce_input_gradient(const Matrix2D& softmax_output, const Matrix2D& target) {
    Matrix2D g = sub(softmax_output, target);
    scale_inplace(g, 1.0 / static_cast<double>(softmax_output.rows()));
    return g;
}

} // namespace nnreg
