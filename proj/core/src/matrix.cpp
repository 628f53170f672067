#include "nnreg/matrix.hpp"

#include <cmath>
#include <string>

#include "nnreg/errors.hpp"

namespace nnreg {

namespace {

std::string shape_str(const Matrix2D& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix2D& a, const Matrix2D& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) + " differ");
    }
}

} // namespace

Matrix2D Matrix2D::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r > 0 ? rows.begin()->size() : 0;
    Matrix2D m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("from_rows: ragged row lengths");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions of " + shape_str(a) + " and " + shape_str(b) + " do not match");
    }
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Matrix2D c(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = b.row(p);
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

Matrix2D matmul_at(const Matrix2D& a, const Matrix2D& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_at: row counts of " + shape_str(a) + " and " + shape_str(b) + " do not match");
    }
    const std::size_t n = a.cols(), k = a.rows(), m = b.cols();
    Matrix2D c(n, m);
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a.row(p);
        const double* brow = b.row(p);
        for (std::size_t i = 0; i < n; ++i) {
            const double aip = arow[i];
            double* crow = c.row(i);
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

Matrix2D matmul_bt(const Matrix2D& a, const Matrix2D& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_bt: column counts of " + shape_str(a) + " and " + shape_str(b) + " do not match");
    }
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    Matrix2D c(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
    return c;
}

Matrix2D transpose(const Matrix2D& a) {
    Matrix2D t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix2D add(const Matrix2D& a, const Matrix2D& b) {
    require_same_shape(a, b, "add");
    Matrix2D c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix2D sub(const Matrix2D& a, const Matrix2D& b) {
    require_same_shape(a, b, "sub");
    Matrix2D c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix2D hadamard(const Matrix2D& a, const Matrix2D& b) {
    require_same_shape(a, b, "hadamard");
    Matrix2D c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
    return c;
}

Matrix2D scale(const Matrix2D& a, double s) {
    Matrix2D c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

void add_inplace(Matrix2D& a, const Matrix2D& b) {
    require_same_shape(a, b, "add_inplace");
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

void scale_inplace(Matrix2D& a, double s) {
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= s;
}

void axpy_inplace(Matrix2D& a, double s, const Matrix2D& b) {
    require_same_shape(a, b, "axpy_inplace");
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += s * b.data()[i];
}

Matrix2D append_ones_column(const Matrix2D& a) {
    Matrix2D c(a.rows(), a.cols() + 1);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* src = a.row(i);
        double* dst = c.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j];
        dst[a.cols()] = 1.0;
    }
    return c;
}

Matrix2D take_rows(const Matrix2D& a, const std::vector<std::size_t>& indices) {
    Matrix2D c(indices.size(), a.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= a.rows()) throw ShapeError("take_rows: index out of range");
        const double* src = a.row(indices[i]);
        double* dst = c.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j];
    }
    return c;
}

bool all_finite(const Matrix2D& a) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a.data()[i])) return false;
    }
    return true;
}

void require_finite(const Matrix2D& a, const char* context) {
    if (!all_finite(a)) {
        throw NumericalAbort(std::string(context) + ": non-finite value encountered");
    }
}

} // namespace nnreg
