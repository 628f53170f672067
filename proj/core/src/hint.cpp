#include "nnreg/hint.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

#include "nnreg/errors.hpp"
#include "nnreg/rng.hpp"

namespace nnreg {

namespace {

constexpr std::uint64_t kHintShuffleStream = 0x48A1;

// Cosine clamped for arccos is handled by the caller; gradients are zeroed
// within this margin of +-1 where the arccos derivative blows up.
constexpr double kCosineMargin = 1e-8;

double dot(const double* a, const double* b, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t v = 0; v < dim; ++v) acc += a[v] * b[v];
    return acc;
}

} // namespace

Dissimilarity dissimilarity_from_name(const std::string& name) {
    if (name == "sed") return Dissimilarity::SED;
    if (name == "nmd") return Dissimilarity::NMD;
    if (name == "as") return Dissimilarity::AS;
    throw ConfigError("unknown dissimilarity '" + name + "' (expected sed, nmd, or as)");
}

const char* dissimilarity_name(Dissimilarity d) {
    switch (d) {
    case Dissimilarity::SED: return "sed";
    case Dissimilarity::NMD: return "nmd";
    case Dissimilarity::AS: return "as";
    }
    throw ConfigError("invalid dissimilarity enum value");
}

double dissimilarity(Dissimilarity kind, const double* a, const double* b, std::size_t dim) {
    if (dim == 0) throw ShapeError("dissimilarity needs at least one dimension");
    switch (kind) {
    case Dissimilarity::SED: {
        double acc = 0.0;
        for (std::size_t v = 0; v < dim; ++v) {
            const double d = a[v] - b[v];
            acc += d * d;
        }
        return acc;
    }
    case Dissimilarity::NMD: {
        double acc = 0.0;
        for (std::size_t v = 0; v < dim; ++v) acc += std::abs(a[v] - b[v]);
        return acc / static_cast<double>(dim);
    }
    case Dissimilarity::AS: {
        const double na = std::sqrt(dot(a, a, dim));
        const double nb = std::sqrt(dot(b, b, dim));
        if (na == 0.0 || nb == 0.0)
            throw DegenerateInputError("angular similarity is undefined for a zero vector");
        const double u = std::clamp(dot(a, b, dim) / (na * nb), -1.0, 1.0);
        return std::acos(u);
    }
    }
    throw ConfigError("invalid dissimilarity enum value");
}

double dissimilarity(Dissimilarity kind, const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("dissimilarity arguments differ in dimension");
    return dissimilarity(kind, a.data(), b.data(), a.size());
}

namespace {

struct ClassGroup {
    std::vector<std::size_t> rows;
};

// class_count > 0 bounds the label universe; 0 groups by observed labels only.
std::vector<ClassGroup> group_by_class(const std::vector<int>& labels, std::size_t class_count) {
    std::map<int, ClassGroup> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) throw ConfigError("negative class label");
        if (class_count > 0 && static_cast<std::size_t>(labels[i]) >= class_count)
            throw ConfigError("label " + std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(class_count) + ")");
        by_label[labels[i]].rows.push_back(i);
    }
    std::vector<ClassGroup> groups;
    groups.reserve(by_label.size());
    for (auto& [label, group] : by_label) groups.push_back(std::move(group));
    return groups;
}

// Shared penalty core. Enumerates each unordered same-class pair once; the
// 2/(S' n (n-1)) weight restores the ordered-sum normalization. When grad is
// non-null it receives d value / d representations.
double penalty_impl(const Matrix2D& reps, const std::vector<int>& labels, Dissimilarity measure,
                    std::size_t class_count, HintPenaltyGradient* grad) {
    if (reps.rows() != labels.size()) throw ShapeError("representation row count differs from label count");
    const std::size_t dim = reps.cols();
    if (grad != nullptr) {
        grad->d_representations = Matrix2D(reps.rows(), dim);
        grad->singular_pairs = 0;
    }

    const auto groups = group_by_class(labels, class_count);
    std::size_t s_prime = 0;
    for (const auto& g : groups)
        if (g.rows.size() >= 2) ++s_prime;
    if (s_prime == 0) return 0.0;

    double acc = 0.0;
    std::vector<double> norms;
    for (const auto& g : groups) {
        const std::size_t n = g.rows.size();
        if (n < 2) continue;
        const double w = 2.0 / (static_cast<double>(s_prime) * static_cast<double>(n) * static_cast<double>(n - 1));

        if (measure == Dissimilarity::AS) {
            norms.resize(n);
            for (std::size_t il = 0; il < n; ++il) {
                const double* a = reps.row(g.rows[il]);
                norms[il] = std::sqrt(dot(a, a, dim));
                if (norms[il] == 0.0)
                    throw DegenerateInputError("angular similarity is undefined for a zero vector");
            }
        }

        for (std::size_t il = 0; il < n; ++il) {
            const std::size_t i = g.rows[il];
            const double* a = reps.row(i);
            for (std::size_t jl = il + 1; jl < n; ++jl) {
                const std::size_t j = g.rows[jl];
                const double* b = reps.row(j);

                switch (measure) {
                case Dissimilarity::SED: {
                    double c = 0.0;
                    for (std::size_t v = 0; v < dim; ++v) {
                        const double d = a[v] - b[v];
                        c += d * d;
                    }
                    acc += w * c;
                    if (grad != nullptr) {
                        double* gi = grad->d_representations.row(i);
                        double* gj = grad->d_representations.row(j);
                        for (std::size_t v = 0; v < dim; ++v) {
                            const double d = 2.0 * (a[v] - b[v]);
                            gi[v] += w * d;
                            gj[v] -= w * d;
                        }
                    }
                    break;
                }
                case Dissimilarity::NMD: {
                    double c = 0.0;
                    for (std::size_t v = 0; v < dim; ++v) c += std::abs(a[v] - b[v]);
                    acc += w * (c / static_cast<double>(dim));
                    if (grad != nullptr) {
                        double* gi = grad->d_representations.row(i);
                        double* gj = grad->d_representations.row(j);
                        const double scale = w / static_cast<double>(dim);
                        for (std::size_t v = 0; v < dim; ++v) {
                            const double d = a[v] - b[v];
                            const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                            gi[v] += scale * s;
                            gj[v] -= scale * s;
                        }
                    }
                    break;
                }
                case Dissimilarity::AS: {
                    const double na = norms[il];
                    const double nb = norms[jl];
                    const double u = dot(a, b, dim) / (na * nb);
                    acc += w * std::acos(std::clamp(u, -1.0, 1.0));
                    if (grad != nullptr) {
                        if (std::abs(u) >= 1.0 - kCosineMargin) {
                            ++grad->singular_pairs;
                        } else {
                            const double du = -1.0 / std::sqrt(1.0 - u * u);
                            double* gi = grad->d_representations.row(i);
                            double* gj = grad->d_representations.row(j);
                            const double cross = 1.0 / (na * nb);
                            for (std::size_t v = 0; v < dim; ++v) {
                                gi[v] += w * du * (b[v] * cross - u * a[v] / (na * na));
                                gj[v] += w * du * (a[v] * cross - u * b[v] / (nb * nb));
                            }
                        }
                    }
                    break;
                }
                }
            }
        }
    }
    return acc;
}

} // namespace

double hint_penalty(const Matrix2D& representations, const std::vector<int>& labels, const HintConfig& cfg) {
    return penalty_impl(representations, labels, cfg.measure, cfg.class_count, nullptr);
}

HintPenaltyGradient hint_penalty_with_gradient(const Matrix2D& representations, const std::vector<int>& labels,
                                               const HintConfig& cfg) {
    HintPenaltyGradient out;
    out.value = penalty_impl(representations, labels, cfg.measure, cfg.class_count, &out);
    return out;
}

std::optional<std::string> hint_layer_warning(const Network& net, const HintConfig& cfg) {
    if (cfg.layer_index < 1 || cfg.layer_index > net.layer_count()) return std::nullopt;
    const Activation act = net.layers()[cfg.layer_index - 1].activation;
    if (act == Activation::ReLU || act == Activation::Identity) {
        return std::string("penalized layer ") + std::to_string(cfg.layer_index) + " uses the unbounded activation " +
               activation_name(act) + "; bounded activations suit the invariance penalty better";
    }
    return std::nullopt;
}

Matrix2D one_hot(const std::vector<int>& labels, std::size_t class_count) {
    if (class_count == 0) throw ConfigError("one_hot needs at least one class");
    Matrix2D out(labels.size(), class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count)
            throw ConfigError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(class_count) +
                              ")");
        out(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return out;
}

HintEpochLosses train_epoch_hint(Network& net, const Matrix2D& inputs, const std::vector<int>& labels,
                                 const HintTrainConfig& cfg, const OptimConfig& opt_cfg_sup, OptimizerState& opt_sup,
                                 const OptimConfig& opt_cfg_hint, OptimizerState& opt_hint, std::size_t epoch,
                                 std::uint64_t seed) {
    const HintConfig& hint = cfg.hint;
    if (hint.gamma < 0.0 || hint.lambda < 0.0) throw ConfigError("hint weights must be nonnegative");
    if (hint.layer_index < 1 || hint.layer_index >= net.layer_count())
        throw ConfigError("hint layer index " + std::to_string(hint.layer_index) + " outside [1, " +
                          std::to_string(net.layer_count() - 1) + "]");
    if (inputs.rows() != labels.size()) throw ShapeError("input row count differs from label count");
    if (inputs.rows() == 0) throw ConfigError("empty training set");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
    if (net.output_dim() != hint.class_count)
        throw ConfigError("network has " + std::to_string(net.output_dim()) + " outputs but class_count is " +
                          std::to_string(hint.class_count));

    if (epoch == 0) {
        if (auto warning = hint_layer_warning(net, hint)) std::cerr << "warning: " << *warning << "\n";
    }

    const Matrix2D targets = one_hot(labels, hint.class_count);
    std::vector<std::size_t> order(inputs.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = derive_rng(seed, kHintShuffleStream, epoch);
    rng.shuffle(order);

    HintEpochLosses losses;
    std::size_t batches = 0;
    std::vector<std::size_t> idx;
    std::vector<int> batch_labels;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(stop));
        const Matrix2D xb = take_rows(inputs, idx);
        const Matrix2D yb = take_rows(targets, idx);

        const ForwardTrace trace = forward(net, xb);
        losses.j_sup += loss_value(Loss::CrossEntropy, trace.output(), yb);
        BackpropResult sup = backprop_from_loss(net, trace, Loss::CrossEntropy, yb);
        if (hint.gamma != 1.0)
            for (Matrix2D& g : sup.grads.d_weights) scale_inplace(g, hint.gamma);
        sgd_step(net, sup.grads, opt_sup, opt_cfg_sup);

        if (hint.lambda > 0.0) {
            batch_labels.resize(idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r) batch_labels[r] = labels[idx[r]];
            const ForwardTrace prefix = forward_prefix(net, xb, hint.layer_index);
            HintPenaltyGradient pg = hint_penalty_with_gradient(prefix.post.back(), batch_labels, hint);
            losses.j_hint += pg.value;
            if (hint.lambda != 1.0) scale_inplace(pg.d_representations, hint.lambda);
            BackpropResult hp = backprop_prefix(net, prefix, pg.d_representations, hint.layer_index);
            sgd_step_prefix(net, hp.grads, opt_hint, opt_cfg_hint);
        }
        ++batches;
    }

    losses.j_sup /= static_cast<double>(batches);
    if (hint.lambda > 0.0) losses.j_hint /= static_cast<double>(batches);
    return losses;
}

std::vector<double> invariance_probe(const Network& net, const Matrix2D& inputs, const std::vector<int>& labels,
                                     Dissimilarity measure) {
    const ForwardTrace trace = forward(net, inputs);
    HintConfig cfg;
    cfg.measure = measure;
    cfg.class_count = 0; // group by the labels that actually appear
    std::vector<double> values(net.layer_count());
    for (std::size_t k = 0; k < net.layer_count(); ++k) values[k] = hint_penalty(trace.post[k], labels, cfg);
    return values;
}

} // namespace nnreg
