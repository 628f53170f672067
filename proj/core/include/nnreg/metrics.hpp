// Task metrics: classification error, shape NRMSE, CDF/AUC over error sets,
// and the discard-extremes multi-run aggregation protocol.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "nnreg/matrix.hpp"

namespace nnreg {

// Ordered 2-D point list plus the two reference point indices whose distance
// normalizes the error (inter-ocular distance in the landmark setting).
struct Shape {
    std::vector<std::array<double, 2>> points;
    std::size_t ref_a = 0;
    std::size_t ref_b = 1;
};

// Builds a Shape from one row of a (rows x 2P) coordinate matrix laid out
// x0,y0,x1,y1,...
Shape shape_from_row(const Matrix2D& coords, std::size_t row, std::size_t ref_a, std::size_t ref_b);

// Mean per-point Euclidean distance normalized by point count and by the
// distance between the truth's reference points.
double nrmse(const Shape& pred, const Shape& truth);

// Fraction of errors <= x.
double cdf_at(const std::vector<double>& errors, double x);

// Mean of cdf_at over the 501-point grid x = 0, 0.001, ..., 0.5; in [0,1].
double auc_cdf(const std::vector<double>& errors);

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0; // population standard deviation
};

// Drops the single best and single worst value, returns mean and population
// std of the rest. Requires at least 3 values.
Aggregate aggregate_runs(const std::vector<double>& values);

// Percent of mismatching labels.
double classification_error(const std::vector<int>& predictions, const std::vector<int>& truth);

// Row argmax with ties broken toward the lowest index.
std::size_t argmax_row(const Matrix2D& m, std::size_t row);
std::vector<int> argmax_rows(const Matrix2D& m);

} // namespace nnreg
