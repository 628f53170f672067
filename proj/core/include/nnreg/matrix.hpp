// Dense row-major matrix of doubles, the sole numeric carrier of the library.
#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace nnreg {

class Matrix2D {
public:
    Matrix2D() = default;

    Matrix2D(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix2D from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    bool same_shape(const Matrix2D& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool operator==(const Matrix2D& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

    void fill(double value) { data_.assign(data_.size(), value); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Product a*b. Per-element accumulation runs in ascending inner-index order,
// identical to the naive triple loop, so results are bit-comparable to it.
Matrix2D matmul(const Matrix2D& a, const Matrix2D& b);

// transpose(a)*b and a*transpose(b) without materializing the transpose.
// Same per-element accumulation order as matmul on the materialized operand.
Matrix2D matmul_at(const Matrix2D& a, const Matrix2D& b);
Matrix2D matmul_bt(const Matrix2D& a, const Matrix2D& b);

Matrix2D transpose(const Matrix2D& a);

Matrix2D add(const Matrix2D& a, const Matrix2D& b);
Matrix2D sub(const Matrix2D& a, const Matrix2D& b);
Matrix2D hadamard(const Matrix2D& a, const Matrix2D& b);
Matrix2D scale(const Matrix2D& a, double s);

void add_inplace(Matrix2D& a, const Matrix2D& b);
void scale_inplace(Matrix2D& a, double s);
// a += s*b
void axpy_inplace(Matrix2D& a, double s, const Matrix2D& b);

// Copy of `a` with a constant-1 column appended (the extended-input
// convention that folds biases into the weight matrix).
Matrix2D append_ones_column(const Matrix2D& a);

// Copy of the listed rows, in the given order.
Matrix2D take_rows(const Matrix2D& a, const std::vector<std::size_t>& indices);

bool all_finite(const Matrix2D& a);
// Throws NumericalAbort naming `context` if any entry is NaN or infinite.
void require_finite(const Matrix2D& a, const char* context);

} // namespace nnreg
