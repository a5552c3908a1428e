#pragma once

// Dense real matrix kernels for the spectral analysis: Kronecker products,
// the vec-permutation (commutation) matrix and the largest eigenvalue of a
// symmetric matrix.
//
// Storage is row-major. Vectors use column-stacking for vec(.), so for an
// n x d matrix A, vec(A)[c * n + r] = A(r, c).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mosaic {

using Vector = std::vector<double>;

// Default upper bound on the number of entries of a single dense result.
// 2^26 doubles is 512 MiB.
inline constexpr std::size_t kDefaultMaxEntries = std::size_t{1} << 26;

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols);
    // Throws std::invalid_argument if entries.size() != rows * cols or any
    // entry is non-finite.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> diag);
    // Rows given as nested lists; all rows must have equal length.
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& entries() const { return data_; }

    DenseMatrix transposed() const;
    bool all_finite() const;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Thrown by largest_eigenvalue_symmetric when the iteration cap is reached.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, Vector last_iterate, double last_value,
                     double residual, std::size_t iterations)
        : std::runtime_error(what),
          last_iterate(std::move(last_iterate)),
          last_value(last_value),
          residual(residual),
          iterations(iterations) {}

    Vector last_iterate;
    double last_value;
    double residual;
    std::size_t iterations;
};

// Throws std::length_error when rows * cols exceeds max_entries.
void check_size(std::size_t rows, std::size_t cols, std::size_t max_entries,
                const char* what);

DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b,
                      std::size_t max_entries = kDefaultMaxEntries);

// K_{n,d}: the nd x nd permutation with K_{n,d} vec(A) = vec(A^T) for every
// n x d matrix A.
DenseMatrix commutation_matrix(std::size_t n, std::size_t d,
                               std::size_t max_entries = kDefaultMaxEntries);

// Zero entries of the left operand are skipped, so products with permutation,
// block-diagonal or Kronecker-structured left factors are cheap.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b,
                   std::size_t max_entries = kDefaultMaxEntries);
Vector matvec(const DenseMatrix& a, std::span<const double> x);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& a, double factor);

// M^T M, exactly symmetric.
DenseMatrix gram(const DenseMatrix& m);

// vec(.) with column-stacking, and its inverse.
Vector vec(const DenseMatrix& a);
DenseMatrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double squared_norm(std::span<const double> a);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double relative_asymmetry(const DenseMatrix& s);

enum class EigenMethod { lanczos, power };

struct EigenOptions {
    EigenMethod method = EigenMethod::lanczos;
    double tol = 1e-9;
    // Power iteration: iteration cap. Lanczos: cap on the Krylov dimension
    // (which never exceeds the matrix order).
    std::size_t max_iterations = 100000;
    double symmetry_tol = 1e-10;
    // Power iteration only: the caller guarantees a positive semidefinite
    // input (e.g. a Gram matrix), so the Gershgorin shift is skipped.
    bool positive_semidefinite = false;
};

// Algebraically largest eigenvalue of a symmetric matrix. Both methods start
// from the same fixed pseudo-random vector, so results are deterministic, and
// stop once the residual bound of the current estimate theta drops to
// tol * max(1, |theta|).
//   lanczos: Krylov iteration with full reorthogonalization; the residual is
//            the Ritz bound beta_j |s_j|.
//   power:   power iteration on a Gershgorin-shifted copy (the shift makes the
//            spectrum nonnegative so the dominant eigenvalue is the algebraic
//            maximum); the residual is ||Sv - theta v||.
// Throws std::invalid_argument for non-square or asymmetric input and
// ConvergenceError (carrying the last iterate and residual) at the cap.
double largest_eigenvalue_symmetric(const DenseMatrix& s, const EigenOptions& options = {});
double largest_eigenvalue_symmetric(const DenseMatrix& s, double tol);

}  // namespace mosaic
