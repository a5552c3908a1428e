#include "mosaic/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <tuple>
#include <utility>

namespace mosaic {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("DenseMatrix: expected " + std::to_string(rows * cols) +
                                    " entries, got " + std::to_string(data_.size()));
    }
    if (!all_finite()) throw std::invalid_argument("DenseMatrix: non-finite entry");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
    DenseMatrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw std::invalid_argument("DenseMatrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

bool DenseMatrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void check_size(std::size_t rows, std::size_t cols, std::size_t max_entries, const char* what) {
    if (rows != 0 && cols > std::numeric_limits<std::size_t>::max() / rows) {
        throw std::length_error(std::string(what) + ": dimension overflow");
    }
    if (rows * cols > max_entries) {
        std::ostringstream msg;
        msg << what << ": result " << rows << "x" << cols << " has " << rows * cols
            << " entries, exceeding the limit of " << max_entries;
        throw std::length_error(msg.str());
    }
}

DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b, std::size_t max_entries) {
    if (a.empty() || b.empty()) throw std::invalid_argument("kronecker: empty operand");
    const std::size_t p = b.rows(), q = b.cols();
    if (a.rows() > std::numeric_limits<std::size_t>::max() / p ||
        a.cols() > std::numeric_limits<std::size_t>::max() / q) {
        throw std::length_error("kronecker: dimension overflow");
    }
    check_size(a.rows() * p, a.cols() * q, max_entries, "kronecker");
    DenseMatrix out(a.rows() * p, a.cols() * q);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double s = a(i, j);
            if (s == 0.0) continue;
            for (std::size_t r = 0; r < p; ++r)
                for (std::size_t c = 0; c < q; ++c) out(i * p + r, j * q + c) = s * b(r, c);
        }
    }
    return out;
}

DenseMatrix commutation_matrix(std::size_t n, std::size_t d, std::size_t max_entries) {
    if (n == 0 || d == 0) throw std::invalid_argument("commutation_matrix: n and d must be >= 1");
    if (n > std::numeric_limits<std::size_t>::max() / d) {
        throw std::length_error("commutation_matrix: dimension overflow");
    }
    check_size(n * d, n * d, max_entries, "commutation_matrix");
    // A is n x d. vec(A)[c*n + r] = A(r,c) and vec(A^T)[r*d + c] = A(r,c).
    DenseMatrix k(n * d, n * d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) k(r * d + c, c * n + r) = 1.0;
    return k;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, std::size_t max_entries) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + ")");
    }
    check_size(a.rows(), b.cols(), max_entries, "matmul");
    DenseMatrix out(a.rows(), b.cols());
    const std::size_t m = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double s = a(i, k);
            if (s == 0.0) continue;
            const double* src = b.row(k).data();
            for (std::size_t j = 0; j < m; ++j) dst[j] += s * src[j];
        }
    }
    return out;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* row = a.row(i).data();
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: shape mismatch");
    std::vector<double> out(a.entries());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.entries()[i];
    return DenseMatrix(a.rows(), a.cols(), std::move(out));
}

DenseMatrix scaled(const DenseMatrix& a, double factor) {
    std::vector<double> out(a.entries());
    for (double& v : out) v *= factor;
    return DenseMatrix(a.rows(), a.cols(), std::move(out));
}

DenseMatrix gram(const DenseMatrix& m) {
    const std::size_t n = m.cols();
    DenseMatrix g(n, n);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* row = m.row(r).data();
        for (std::size_t i = 0; i < n; ++i) {
            const double s = row[i];
            if (s == 0.0) continue;
            double* dst = g.row(i).data();
            for (std::size_t j = i; j < n; ++j) dst[j] += s * row[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

Vector vec(const DenseMatrix& a) {
    Vector v(a.rows() * a.cols());
    for (std::size_t c = 0; c < a.cols(); ++c)
        for (std::size_t r = 0; r < a.rows(); ++r) v[c * a.rows() + r] = a(r, c);
    return v;
}

DenseMatrix unvec(std::span<const double> v, std::size_t rows, std::size_t cols) {
    if (v.size() != rows * cols) throw std::invalid_argument("unvec: length mismatch");
    DenseMatrix a(rows, cols);
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < rows; ++r) a(r, c) = v[c * rows + r];
    return a;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }
double norm2(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.entries().size(); ++i)
        worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
    return worst;
}

double relative_asymmetry(const DenseMatrix& s) {
    double scale = 0.0, asym = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t j = 0; j < s.cols(); ++j) {
            scale = std::max(scale, std::abs(s(i, j)));
            if (j > i) asym = std::max(asym, std::abs(s(i, j) - s(j, i)));
        }
    return scale == 0.0 ? 0.0 : asym / scale;
}

namespace {

// Fixed start vector: splitmix64 stream mapped to (-1, 1).
Vector start_vector(std::size_t n) {
    Vector v(n);
    std::uint64_t state = 0x9E3779B97F4A7C15ULL;
    for (double& x : v) {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        x = 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
    }
    const double nv = norm2(v);
    for (double& x : v) x /= nv;
    return v;
}

}  // namespace

namespace {

void check_symmetric_input(const DenseMatrix& s, const EigenOptions& options) {
    if (!s.square() || s.empty()) {
        throw std::invalid_argument("largest_eigenvalue_symmetric: matrix must be square and non-empty");
    }
    if (!(options.tol > 0.0)) throw std::invalid_argument("largest_eigenvalue_symmetric: tol must be > 0");
    if (const double asym = relative_asymmetry(s); asym > options.symmetry_tol) {
        std::ostringstream msg;
        msg << "largest_eigenvalue_symmetric: matrix is not symmetric (relative asymmetry " << asym
            << ")";
        throw std::invalid_argument(msg.str());
    }
}

void symmetric_matvec(const DenseMatrix& s, const Vector& v, Vector& w) {
    const std::size_t n = s.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = s.row(i).data();
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
        w[i] = acc;
    }
}

[[noreturn]] void throw_no_convergence(const EigenOptions& options, Vector v, double theta,
                                       double residual) {
    std::ostringstream msg;
    msg << "largest_eigenvalue_symmetric: no convergence after " << options.max_iterations
        << " iterations (last value " << theta << ", residual " << residual << ")";
    throw ConvergenceError(msg.str(), std::move(v), theta, residual, options.max_iterations);
}

double power_iteration(const DenseMatrix& s, const EigenOptions& options) {
    const std::size_t n = s.rows();
    // Gershgorin lower bound on the spectrum.
    double lower = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) radius += std::abs(s(i, j));
        lower = std::min(lower, s(i, i) - radius);
    }
    const double shift = (lower < 0.0 && !options.positive_semidefinite) ? -lower : 0.0;

    Vector v = start_vector(n);
    Vector w(n);
    double theta = 0.0;
    double residual = 0.0;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        symmetric_matvec(s, v, w);
        theta = dot(v, w);
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = w[i] - theta * v[i];
            r2 += r * r;
        }
        residual = std::sqrt(r2);
        if (residual <= options.tol * std::max(1.0, std::abs(theta))) return theta;
        for (std::size_t i = 0; i < n; ++i) w[i] += shift * v[i];
        const double nw = norm2(w);
        if (nw == 0.0) return theta;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    }
    throw_no_convergence(options, std::move(v), theta, residual);
}

// Number of eigenvalues of the symmetric tridiagonal (diag, off) below x.
std::size_t sturm_count(const Vector& diag, const Vector& off, double x) {
    std::size_t count = 0;
    double d = 1.0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        const double b2 = i == 0 ? 0.0 : off[i - 1] * off[i - 1];
        d = diag[i] - x - (i == 0 ? 0.0 : b2 / d);
        if (d == 0.0) d = -std::numeric_limits<double>::min();
        if (d < 0.0) ++count;
    }
    return count;
}

// Largest eigenvalue of a symmetric tridiagonal matrix by bisection, and the
// last component of its unit eigenvector by inverse iteration.
std::pair<double, double> tridiagonal_top(const Vector& diag, const Vector& off) {
    const std::size_t m = diag.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < m ? std::abs(off[i]) : 0.0);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    const double scale = std::max(std::abs(lo), std::abs(hi));
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * scale; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(diag, off, mid) >= m) hi = mid;
        else lo = mid;
    }
    const double theta = 0.5 * (lo + hi);
    if (m == 1) return {theta, 1.0};

    // Inverse iteration on T - (theta + delta) I with a pivoted tridiagonal LU.
    const double shift = theta + 1e-10 * std::max(1.0, scale);
    Vector y(m, 1.0);
    for (int sweep = 0; sweep < 3; ++sweep) {
        // Bands: sub (l), main (dd), super (u), second super (u2) from pivoting.
        Vector l(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(m - 1));
        Vector dd(m), u(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(m - 1)), u2(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) dd[i] = diag[i] - shift;
        Vector b = y;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            if (std::abs(dd[i]) >= std::abs(l[i])) {
                if (dd[i] == 0.0) dd[i] = std::numeric_limits<double>::min();
                const double f = l[i] / dd[i];
                dd[i + 1] -= f * u[i];
                b[i + 1] -= f * b[i];
                l[i] = 0.0;
            } else {
                // Swap rows i and i+1.
                const double f = dd[i] / l[i];
                dd[i] = l[i];
                const double tmp = dd[i + 1];
                dd[i + 1] = u[i] - f * tmp;
                if (i + 2 < m) {
                    u2[i] = u[i + 1];
                    u[i + 1] = -f * u2[i];
                }
                u[i] = tmp;
                std::swap(b[i], b[i + 1]);
                b[i + 1] -= f * b[i];
            }
        }
        if (dd[m - 1] == 0.0) dd[m - 1] = std::numeric_limits<double>::min();
        y[m - 1] = b[m - 1] / dd[m - 1];
        y[m - 2] = (b[m - 2] - u[m - 2] * y[m - 1]) / dd[m - 2];
        for (std::size_t i = m - 2; i-- > 0;) y[i] = (b[i] - u[i] * y[i + 1] - u2[i] * y[i + 2]) / dd[i];
        const double ny = norm2(y);
        for (double& v : y) v /= ny;
    }
    return {theta, y[m - 1]};
}

double lanczos(const DenseMatrix& s, const EigenOptions& options) {
    const std::size_t n = s.rows();
    const std::size_t steps = std::min(n, options.max_iterations);
    std::vector<Vector> basis;
    basis.reserve(steps);
    basis.push_back(start_vector(n));
    Vector diag, off;
    Vector w(n);
    double theta = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < steps; ++j) {
        const Vector& v = basis[j];
        symmetric_matvec(s, v, w);
        const double alpha = dot(v, w);
        diag.push_back(alpha);
        // Full reorthogonalization, applied twice.
        for (int pass = 0; pass < 2; ++pass) {
            for (const Vector& q : basis) {
                const double c = dot(q, w);
                for (std::size_t i = 0; i < n; ++i) w[i] -= c * q[i];
            }
        }
        const double beta = norm2(w);
        double last = 1.0;
        std::tie(theta, last) = tridiagonal_top(diag, off);
        residual = beta * std::abs(last);
        const double scale = std::max(1.0, std::abs(theta));
        if (residual <= options.tol * scale || j + 1 == n || beta <= 1e-14 * scale) return theta;
        off.push_back(beta);
        Vector next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = w[i] / beta;
        basis.push_back(std::move(next));
    }
    throw_no_convergence(options, basis.back(), theta, residual);
}

}  // namespace

double largest_eigenvalue_symmetric(const DenseMatrix& s, const EigenOptions& options) {
    check_symmetric_input(s, options);
    return options.method == EigenMethod::lanczos ? lanczos(s, options) : power_iteration(s, options);
}

double largest_eigenvalue_symmetric(const DenseMatrix& s, double tol) {
    EigenOptions options;
    options.tol = tol;
    return largest_eigenvalue_symmetric(s, options);
}

}  // namespace mosaic
