#pragma once

// Shared helpers for the test binaries: random fixtures and conversions to
// Eigen, which serves as the independent dense oracle.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mosaic/linalg.hpp"

namespace testsupport {

inline mosaic::DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    mosaic::DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
}

inline mosaic::DenseMatrix random_symmetric(std::size_t n, std::mt19937_64& rng) {
    auto m = random_matrix(n, n, rng);
    mosaic::DenseMatrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
}

// B B^T + n I, comfortably positive definite.
inline mosaic::DenseMatrix random_spd(std::size_t n, std::mt19937_64& rng) {
    auto b = random_matrix(n, n, rng);
    mosaic::DenseMatrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < n; ++k) v += b(i, k) * b(j, k);
            s(i, j) = s(j, i) = v / static_cast<double>(n);
        }
    for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.5;
    return s;
}

inline mosaic::Vector random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    mosaic::Vector v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

inline Eigen::MatrixXd to_eigen(const mosaic::DenseMatrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

inline double max_abs(const mosaic::Vector& a, const mosaic::Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace testsupport
