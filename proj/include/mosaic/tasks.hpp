#pragma once

// Local objectives: the quadratic ||x - x*||_A^2 used by the consensus
// analysis, and a linear softmax classifier over synthetic Gaussian blobs
// with Dirichlet label-skew partitioning.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mosaic/linalg.hpp"
#include "mosaic/rng.hpp"

namespace mosaic {

class QuadraticTask {
public:
    // Throws std::invalid_argument unless a is symmetric (1e-12) and
    // positive definite, and x_star has matching length.
    QuadraticTask(DenseMatrix a, Vector x_star);

    std::size_t dimension() const { return x_star_.size(); }
    const DenseMatrix& correlation() const { return a_; }
    const Vector& optimum() const { return x_star_; }
    double smallest_eigenvalue() const { return lambda_min_; }

    // (x - x*)^T A (x - x*)
    double loss(std::span<const double> x) const;
    // 2 A (x - x*)
    Vector grad(std::span<const double> x) const;

private:
    DenseMatrix a_;
    Vector x_star_;
    double lambda_min_ = 0.0;
};

inline Vector quadratic_grad(const QuadraticTask& task, std::span<const double> x) {
    return task.grad(x);
}

struct CorrelationSpec {
    enum class Kind { toeplitz, block };
    Kind kind = Kind::toeplitz;
    double rho = 0.9;          // toeplitz: A[i,j] = rho^|i-j|
    std::size_t blocks = 4;    // block: equal-size diagonal blocks
    double within = 0.8;       // block: intra-block off-diagonal value
    double across = 0.0;       // block: inter-block value

    std::string name() const;  // e.g. "toeplitz" / "block"
};

// Throws std::invalid_argument for |rho| >= 1, blocks not dividing d, or a
// result that is not positive definite (message reports lambda_min).
DenseMatrix make_correlation_matrix(const CorrelationSpec& spec, std::size_t d);

// lambda_min of a symmetric matrix, via the largest eigenvalue of -A.
double smallest_eigenvalue_symmetric(const DenseMatrix& a, double tol = 1e-8);

struct Dataset {
    DenseMatrix features;  // one sample per row
    std::vector<std::size_t> labels;
    std::size_t classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_dim() const { return features.cols(); }
};

// Linear softmax model over a dataset. Parameter layout: class-major weight
// rows (classes x feature_dim) followed by one bias per class.
class ClassificationTask {
public:
    explicit ClassificationTask(Dataset data);

    const Dataset& data() const { return data_; }
    std::size_t dimension() const { return data_.classes * (data_.feature_dim() + 1); }

    // Predicted class for sample `index` of `set` under parameters x.
    std::size_t predict(std::span<const double> x, const Dataset& set, std::size_t index) const;

private:
    Dataset data_;
};

struct LossGrad {
    double loss = 0.0;
    Vector grad;
};

// Mean cross-entropy over `batch` (indices into task.data()) and its exact
// gradient. Throws std::invalid_argument on an empty batch or a bad index.
LossGrad softmax_loss_grad(const ClassificationTask& task, std::span<const double> x,
                           std::span<const std::size_t> batch);

// Mean cross-entropy / accuracy of x over every sample of `set`.
double softmax_loss(const ClassificationTask& task, std::span<const double> x, const Dataset& set);
double accuracy(const ClassificationTask& task, std::span<const double> x, const Dataset& set);

using Partition = std::vector<std::vector<std::size_t>>;

// Label-skew partition: per class, node shares ~ Dirichlet(alpha), counts by
// largest-remainder rounding. Empty nodes then take one sample from the
// currently largest node.
Partition dirichlet_partition(std::span<const std::size_t> labels, std::size_t n, double alpha,
                              Rng& rng);

// Uniform random split into n near-equal shards.
Partition iid_partition(std::size_t samples, std::size_t n, Rng& rng);

// Gaussian blobs: class c is centred at the unit vector e_c (requires
// classes <= dim) with isotropic noise of standard deviation `spread`.
// Samples are ordered class by class.
Dataset synth_dataset(std::size_t classes, std::size_t dim, std::size_t per_class, double spread,
                      Rng& rng);

// CSV: one sample per row, features then the integer label in the last column.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace mosaic
