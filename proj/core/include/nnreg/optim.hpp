// SGD with momentum and L1/L2 decay, early stopping on validation loss, and
// closed-form solutions of diagonal quadratic problems used as oracles for
// decay and early-stopping behavior.
#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "nnreg/network.hpp"

namespace nnreg {

struct OptimConfig {
    double learning_rate = 1e-3;
    double momentum = 0.0;   // in [0,1)
    double l2_alpha = 0.0;
    double l1_alpha = 0.0;
};

// Per-parameter velocities, one entry per weight matrix handled.
struct OptimizerState {
    std::vector<Matrix2D> velocity;

    static OptimizerState for_network(const Network& net);
    // Velocities for the first `layer_count` layers only (partial updates).
    static OptimizerState for_prefix(const Network& net, std::size_t layer_count);
};

// One step: g_total = g + l2*W + l1*sign(W) (decay skips bias rows, sign(0)=0);
// v <- momentum*v - lr*g_total; W <- W + v. Throws NumericalAbort on
// non-finite gradients.
void sgd_step(Network& net, const GradientSet& grads, OptimizerState& state, const OptimConfig& cfg);

// Same update restricted to layers [0, grads.d_weights.size()); state must
// have been built with for_prefix over the same range.
void sgd_step_prefix(Network& net, const GradientSet& grads, OptimizerState& state, const OptimConfig& cfg);

enum class StopDecision { Continue, Stop };

struct EarlyStopState {
    double best_validation_loss = std::numeric_limits<double>::infinity();
    std::vector<Matrix2D> best_weights;
    std::size_t patience = 10;
    std::size_t epochs_since_improve = 0;
};

// Strict-improvement early stopping: the snapshot is replaced only on a
// strictly lower validation loss; ties consume patience. Stops once
// epochs_since_improve reaches the patience budget.
StopDecision early_stop_update(EarlyStopState& state, double validation_loss, const Network& net);

// Diagonal quadratic J(w) = 1/2 (w-w*)^T H (w-w*) with H = diag(eigenvalues).
struct QuadraticModel {
    std::vector<double> eigenvalues; // all > 0
    std::vector<double> w_star;
};

// w after tau literal gradient steps from w=0 with step size eps. Requires
// |1 - eps*Lambda_i| < 1 for every i; equals [I - (I - eps*Lambda)^tau] w*.
std::vector<double> quadratic_gd_trajectory(const QuadraticModel& model, double eps, std::size_t tau);

// Minimizer of J(w) + alpha*|w|_1: w_i = sign(w*_i) max(|w*_i| - alpha/H_ii, 0).
std::vector<double> l1_closed_form(const QuadraticModel& model, double alpha);

// Minimizer of J(w) + alpha/2*|w|^2: w_i = Lambda_i/(Lambda_i+alpha) * w*_i.
std::vector<double> l2_closed_form(const QuadraticModel& model, double alpha);

} // namespace nnreg
