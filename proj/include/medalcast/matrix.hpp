#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "medalcast/error.hpp"

namespace medalcast {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Dimensions here are small (at most
/// 50x50 covariances and 82x5 states), so a flat vector is all we need.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    Vec row(std::size_t r) const {
        return Vec(row_ptr(r), row_ptr(r) + cols_);
    }
    Vec col(std::size_t c) const {
        Vec out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
        return out;
    }
    void set_row(std::size_t r, const Vec& v) {
        for (std::size_t c = 0; c < cols_; ++c) at(r, c) = v[c];
    }
    void set_col(std::size_t c, const Vec& v) {
        for (std::size_t r = 0; r < rows_; ++r) at(r, c) = v[r];
    }

    Vec& data() { return data_; }
    const Vec& data() const { return data_; }

    bool same_shape(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

private:
    std::size_t rows_, cols_;
    Vec data_;
};

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) t.at(c, r) = a.at(r, c);
    return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw shape_error("matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out.at(i, j) += aik * b.at(k, j);
        }
    return out;
}

/// y = A x
inline Vec matvec(const Matrix& a, const Vec& x) {
    if (a.cols() != x.size()) throw shape_error("matvec: dimension mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        const double* row = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw shape_error("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double mean(const Vec& a) {
    if (a.empty()) throw insufficient_data("mean of empty vector");
    double s = 0.0;
    for (double v : a) s += v;
    return s / static_cast<double>(a.size());
}

inline double variance(const Vec& a) {
    double m = mean(a);
    double s = 0.0;
    for (double v : a) s += (v - m) * (v - m);
    return s / static_cast<double>(a.size());
}

/// Row-major flatten; the inverse of reshape().
inline Vec flatten(const Matrix& m) { return m.data(); }

inline Matrix reshape(const Vec& v, std::size_t rows, std::size_t cols) {
    if (v.size() != rows * cols) throw shape_error("reshape: size mismatch");
    Matrix m(rows, cols);
    m.data() = v;
    return m;
}

inline double max_abs(const Matrix& m) {
    double mx = 0.0;
    for (double v : m.data()) mx = std::max(mx, std::abs(v));
    return mx;
}

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
/// Used for the tiny regressions (ADF has three coefficients).
inline Vec solve_linear(Matrix a, Vec b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw shape_error("solve_linear: not square");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
        if (std::abs(a.at(pivot, col)) < 1e-14)
            throw numeric_error("solve_linear: singular system");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a.at(pivot, c), a.at(col, c));
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a.at(r, col) / a.at(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a.at(i, j) * x[j];
        x[i] = s / a.at(i, i);
    }
    return x;
}

} // namespace medalcast
