#include "nnreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nnreg/errors.hpp"

namespace nnreg {

Shape shape_from_row(const Matrix2D& coords, std::size_t row, std::size_t ref_a, std::size_t ref_b) {
    if (coords.cols() % 2 != 0) throw ShapeError("shape_from_row: coordinate row length must be even");
    if (row >= coords.rows()) throw ShapeError("shape_from_row: row out of range");
    Shape s;
    s.points.resize(coords.cols() / 2);
    for (std::size_t p = 0; p < s.points.size(); ++p) {
        s.points[p] = {coords(row, 2 * p), coords(row, 2 * p + 1)};
    }
    s.ref_a = ref_a;
    s.ref_b = ref_b;
    return s;
}

namespace {

void validate_shape(const Shape& s, const char* which) {
    if (s.points.size() < 2) throw ShapeError(std::string(which) + " shape needs at least 2 points");
    if (s.ref_a >= s.points.size() || s.ref_b >= s.points.size()) {
        throw ShapeError(std::string(which) + " shape: reference index out of range");
    }
    if (s.ref_a == s.ref_b) throw ShapeError(std::string(which) + " shape: reference points must be distinct");
}

double point_distance(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace

double nrmse(const Shape& pred, const Shape& truth) {
    validate_shape(pred, "predicted");
    validate_shape(truth, "truth");
    if (pred.points.size() != truth.points.size()) {
        throw ShapeError("nrmse: point counts differ (" + std::to_string(pred.points.size()) + " vs " +
                         std::to_string(truth.points.size()) + ")");
    }
    const double d = point_distance(truth.points[truth.ref_a], truth.points[truth.ref_b]);
    if (d <= 0.0) throw DegenerateInputError("nrmse: reference points coincide, normalizer is zero");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.points.size(); ++i) {
        sum += point_distance(pred.points[i], truth.points[i]);
    }
    return sum / (static_cast<double>(pred.points.size()) * d);
}

double cdf_at(const std::vector<double>& errors, double x) {
    if (errors.empty()) throw ConfigError("cdf_at: empty error list");
    std::size_t count = 0;
    for (double e : errors) {
        if (e <= x) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(errors.size());
}

double auc_cdf(const std::vector<double>& errors) {
    if (errors.empty()) throw ConfigError("auc_cdf: empty error list");
    double sum = 0.0;
    for (int i = 0; i <= 500; ++i) {
        sum += cdf_at(errors, static_cast<double>(i) / 1000.0);
    }
    return sum / 501.0;
}

Aggregate aggregate_runs(const std::vector<double>& values) {
    if (values.size() < 3) {
        throw ConfigError("aggregate_runs: needs at least 3 values, got " + std::to_string(values.size()));
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size() - 2; // drop one min, one max
    double mean = 0.0;
    for (std::size_t i = 1; i + 1 < sorted.size(); ++i) mean += sorted[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 1; i + 1 < sorted.size(); ++i) {
        const double d = sorted[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    return {mean, std::sqrt(var)};
}

double classification_error(const std::vector<int>& predictions, const std::vector<int>& truth) {
    if (predictions.size() != truth.size()) {
        throw ShapeError("classification_error: length mismatch (" + std::to_string(predictions.size()) + " vs " +
                         std::to_string(truth.size()) + ")");
    }
    if (predictions.empty()) throw ConfigError("classification_error: empty input");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] != truth[i]) ++wrong;
    }
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

std::size_t argmax_row(const Matrix2D& m, std::size_t row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j) {
        if (m(row, j) > m(row, best)) best = j; // strict: ties keep the lowest index
    }
    return best;
}

std::vector<int> argmax_rows(const Matrix2D& m) {
    std::vector<int> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = static_cast<int>(argmax_row(m, i));
    return out;
}

} // namespace nnreg
