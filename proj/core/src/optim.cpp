#include "nnreg/optim.hpp"

#include <cmath>
#include <string>

#include "nnreg/errors.hpp"

namespace nnreg {

OptimizerState OptimizerState::for_network(const Network& net) {
    return for_prefix(net, net.layer_count());
}

OptimizerState OptimizerState::for_prefix(const Network& net, std::size_t layer_count) {
    OptimizerState state;
    state.velocity.reserve(layer_count);
    for (std::size_t k = 0; k < layer_count; ++k) {
        state.velocity.emplace_back(net.weight(k).rows(), net.weight(k).cols());
    }
    return state;
}

namespace {

double sign_of(double w) {
    if (w > 0.0) return 1.0;
    if (w < 0.0) return -1.0;
    return 0.0;
}

void validate_config(const OptimConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw ConfigError("momentum must be in [0,1)");
    if (cfg.l2_alpha < 0.0 || cfg.l1_alpha < 0.0) throw ConfigError("decay coefficients must be >= 0");
}

void step_layer(Matrix2D& w, const Matrix2D& g, Matrix2D& v, const OptimConfig& cfg, std::size_t layer_index) {
    if (!w.same_shape(g) || !w.same_shape(v)) {
        throw ShapeError("sgd_step: gradient/velocity shape mismatch at layer " + std::to_string(layer_index));
    }
    if (!all_finite(g)) {
        throw NumericalAbort("sgd_step: non-finite gradient at layer " + std::to_string(layer_index) +
                             "; aborting training");
    }
    const std::size_t bias_row_start = (w.rows() - 1) * w.cols();
    for (std::size_t i = 0; i < w.size(); ++i) {
        double g_total = g.data()[i];
        if (i < bias_row_start) { // decay never touches the bias row
            g_total += cfg.l2_alpha * w.data()[i] + cfg.l1_alpha * sign_of(w.data()[i]);
        }
        v.data()[i] = cfg.momentum * v.data()[i] - cfg.learning_rate * g_total;
        w.data()[i] += v.data()[i];
    }
}

} // namespace

void sgd_step(Network& net, const GradientSet& grads, OptimizerState& state, const OptimConfig& cfg) {
    validate_config(cfg);
    if (grads.d_weights.size() != net.layer_count() || state.velocity.size() != net.layer_count()) {
        throw ShapeError("sgd_step: gradient or state layer count does not match the network");
    }
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        step_layer(net.weight(k), grads.d_weights[k], state.velocity[k], cfg, k);
    }
}

void sgd_step_prefix(Network& net, const GradientSet& grads, OptimizerState& state, const OptimConfig& cfg) {
    validate_config(cfg);
    const std::size_t count = grads.d_weights.size();
    if (count > net.layer_count() || state.velocity.size() != count) {
        throw ShapeError("sgd_step_prefix: layer range mismatch");
    }
    for (std::size_t k = 0; k < count; ++k) {
        step_layer(net.weight(k), grads.d_weights[k], state.velocity[k], cfg, k);
    }
}

StopDecision early_stop_update(EarlyStopState& state, double validation_loss, const Network& net) {
    if (!std::isfinite(validation_loss)) {
        throw NumericalAbort("early_stop_update: non-finite validation loss");
    }
    if (validation_loss < state.best_validation_loss) {
        state.best_validation_loss = validation_loss;
        state.best_weights = net.weights();
        state.epochs_since_improve = 0;
        return StopDecision::Continue;
    }
    ++state.epochs_since_improve;
    return state.epochs_since_improve >= state.patience ? StopDecision::Stop : StopDecision::Continue;
}

namespace {

void validate_model(const QuadraticModel& model) {
    if (model.eigenvalues.size() != model.w_star.size()) {
        throw ShapeError("quadratic model: eigenvalue and optimum dimensions differ");
    }
    for (double lam : model.eigenvalues) {
        if (!(lam > 0.0)) throw ConfigError("quadratic model: eigenvalues must be > 0");
    }
}

} // namespace

std::vector<double> quadratic_gd_trajectory(const QuadraticModel& model, double eps, std::size_t tau) {
    validate_model(model);
    for (double lam : model.eigenvalues) {
        if (!(std::abs(1.0 - eps * lam) < 1.0)) {
            throw ConfigError("quadratic_gd_trajectory: step size " + std::to_string(eps) +
                              " is unstable for eigenvalue " + std::to_string(lam));
        }
    }
    std::vector<double> w(model.w_star.size(), 0.0);
    for (std::size_t step = 0; step < tau; ++step) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= eps * model.eigenvalues[i] * (w[i] - model.w_star[i]);
        }
    }
    return w;
}

std::vector<double> l1_closed_form(const QuadraticModel& model, double alpha) {
    validate_model(model);
    std::vector<double> w(model.w_star.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double shrunk = std::abs(model.w_star[i]) - alpha / model.eigenvalues[i];
        w[i] = sign_of(model.w_star[i]) * std::max(shrunk, 0.0);
    }
    return w;
}

std::vector<double> l2_closed_form(const QuadraticModel& model, double alpha) {
    validate_model(model);
    std::vector<double> w(model.w_star.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = model.eigenvalues[i] / (model.eigenvalues[i] + alpha) * model.w_star[i];
    }
    return w;
}

} // namespace nnreg
