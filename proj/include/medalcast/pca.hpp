#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "medalcast/error.hpp"
#include "medalcast/matrix.hpp"

#include "json.hpp"

namespace medalcast::pca {

struct Covariance {
    Matrix c;   // n x n, symmetric
    Vec mean;   // training mean, stored for centering at projection time
};

/// C = (1/N) * sum (v - mean)(v - mean)'. Centering is applied before the
/// outer products so that the training mean projects to the zero vector.
inline Covariance covariance(const std::vector<Vec>& vectors) {
    if (vectors.size() < 2)
        throw insufficient_data("covariance needs at least 2 vectors");
    const std::size_t n = vectors[0].size();
    for (const auto& v : vectors)
        if (v.size() != n) throw shape_error("covariance: inconsistent vector sizes");

    Covariance out;
    out.mean.assign(n, 0.0);
    for (const auto& v : vectors)
        for (std::size_t i = 0; i < n; ++i) out.mean[i] += v[i];
    for (double& m : out.mean) m /= static_cast<double>(vectors.size());

    out.c = Matrix(n, n);
    Vec centered(n);
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < n; ++i) centered[i] = v[i] - out.mean[i];
        for (std::size_t i = 0; i < n; ++i) {
            if (centered[i] == 0.0) continue;
            for (std::size_t j = i; j < n; ++j)
                out.c.at(i, j) += centered[i] * centered[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(vectors.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            out.c.at(i, j) *= inv_n;
            out.c.at(j, i) = out.c.at(i, j);
        }
    return out;
}

struct EigenDecomposition {
    Vec values;      // sorted descending
    Matrix vectors;  // orthonormal columns, paired with values
};

inline double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a.at(i, j) * a.at(i, j);
    return std::sqrt(s);
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations. Dimension
/// is fixed at 50 in this pipeline, so robustness wins over asymptotics.
/// Converges when the off-diagonal Frobenius norm drops below `tol`.
inline EigenDecomposition eigen_sym(const Matrix& input, int max_sweeps = 100,
                                    double tol = 1e-12) {
    const std::size_t n = input.rows();
    if (input.cols() != n) throw shape_error("eigen_sym: matrix is not square");
    double scale = std::max(1.0, max_abs(input));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(input.at(i, j) - input.at(j, i)) > 1e-9 * scale)
                throw shape_error("eigen_sym: matrix is not symmetric");

    Matrix a = input;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (offdiag_frobenius(a) < tol * scale) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double app = a.at(p, p), aqq = a.at(q, q);
                double theta = 0.5 * (aqq - app) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps && offdiag_frobenius(a) >= tol * scale)
        throw numeric_error("eigen_sym: Jacobi did not converge in " +
                            std::to_string(max_sweeps) + " sweeps");

    // Stable sort keeps Jacobi output order among equal eigenvalues.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&a](std::size_t i, std::size_t j) {
        return a.at(i, i) > a.at(j, j);
    });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t src = order[col];
        out.values[col] = a.at(src, src);
        // Sign convention: largest-magnitude entry is positive.
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(v.at(k, src)) > best) {
                best = std::abs(v.at(k, src));
                arg = k;
            }
        double sign = (v.at(arg, src) < 0.0) ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors.at(k, col) = sign * v.at(k, src);
    }
    return out;
}

/// Projection matrix P (n x k): top-k eigenvectors by descending eigenvalue,
/// together with the training mean needed to center inputs.
struct ProjectionMatrix {
    Matrix p;
    Vec mean;
};

inline ProjectionMatrix projection(const EigenDecomposition& decomp, const Vec& mean,
                                   std::size_t k = 5) {
    const std::size_t n = decomp.values.size();
    if (k < 1 || k > n)
        throw range_error("projection: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(n) + "]");
    ProjectionMatrix out;
    out.mean = mean;
    out.p = Matrix(n, k);
    for (std::size_t col = 0; col < k; ++col)
        for (std::size_t row = 0; row < n; ++row)
            out.p.at(row, col) = decomp.vectors.at(row, col);
    return out;
}

/// v_reduced = P' (v - mean).
inline Vec project(const ProjectionMatrix& pm, const Vec& v) {
    if (v.size() != pm.p.rows())
        throw shape_error("project: vector has " + std::to_string(v.size()) +
                          " entries, expected " + std::to_string(pm.p.rows()));
    Vec centered(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) centered[i] = v[i] - pm.mean[i];
    Vec out(pm.p.cols(), 0.0);
    for (std::size_t i = 0; i < pm.p.rows(); ++i) {
        if (centered[i] == 0.0) continue;
        for (std::size_t j = 0; j < pm.p.cols(); ++j)
            out[j] += pm.p.at(i, j) * centered[i];
    }
    return out;
}

/// Fraction of variance carried by the top k eigenvalues; tiny negative
/// eigenvalues (round-off) are clamped to zero first.
inline double explained_variance(const EigenDecomposition& decomp, std::size_t k) {
    if (k > decomp.values.size())
        throw range_error("explained_variance: k out of range");
    double total = 0.0, top = 0.0;
    for (std::size_t i = 0; i < decomp.values.size(); ++i) {
        double lambda = std::max(0.0, decomp.values[i]);
        total += lambda;
        if (i < k) top += lambda;
    }
    if (total <= 0.0)
        throw numeric_error("explained_variance: spectrum is all zero");
    return top / total;
}

inline nlohmann::json projection_to_json(const ProjectionMatrix& pm) {
    nlohmann::json j;
    j["rows"] = pm.p.rows();
    j["cols"] = pm.p.cols();
    j["mean"] = pm.mean;
    j["values"] = pm.p.data();
    return j;
}

inline ProjectionMatrix projection_from_json(const nlohmann::json& j) {
    ProjectionMatrix pm;
    pm.mean = j.at("mean").get<Vec>();
    pm.p = reshape(j.at("values").get<Vec>(), j.at("rows").get<std::size_t>(),
                   j.at("cols").get<std::size_t>());
    return pm;
}

} // namespace medalcast::pca
