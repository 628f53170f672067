// Activation functions with derivatives and the two loss functions with
// their output gradients.
#pragma once

#include <string>

#include "nnreg/matrix.hpp"

namespace nnreg {

enum class Activation { Sigmoid, Tanh, ReLU, Softmax, Identity };
enum class Loss { MeanSquaredError, CrossEntropy };

const char* activation_name(Activation a);
const char* loss_name(Loss l);
Activation activation_from_name(const std::string& name);
Loss loss_from_name(const std::string& name);

double sigmoid(double z);

// Elementwise activation; Softmax acts row-wise with max-subtraction
// stabilization, so huge inputs cannot overflow.
Matrix2D apply_activation(Activation kind, const Matrix2D& z);

// Elementwise derivative evaluated at pre-activation z. ReLU'(0) is 1 by
// convention. Softmax has no elementwise derivative; its gradient exists only
// fused with cross-entropy (network module), so requesting it throws.
Matrix2D activation_derivative(Activation kind, const Matrix2D& z);

// MeanSquaredError: (1/2N) sum over rows and columns of (t - p)^2, N = rows.
// The 1/2 keeps the gradient free of a factor 2; the mean over rows makes
// learning rates batch-size independent.
// CrossEntropy: -(1/N) sum of y*log(p) with p clamped to [1e-12, 1];
// targets must be one-hot rows.
double loss_value(Loss kind, const Matrix2D& prediction, const Matrix2D& target);

// d loss / d prediction for MeanSquaredError: (p - t)/N.
Matrix2D mse_output_gradient(const Matrix2D& prediction, const Matrix2D& target);

// d loss / d pre-activation for the fused Softmax+CrossEntropy output layer:
// (softmax(z) - y)/N, taking the already computed softmax output.
Matrix2D softmax_ce_input_gradient(const Matrix2D& softmax_output, const Matrix2D& target);

} // namespace nnreg
