#include "mosaic/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mosaic {

double smallest_eigenvalue_symmetric(const DenseMatrix& a, double tol) {
    EigenOptions options;
    options.tol = tol;
    return -largest_eigenvalue_symmetric(scaled(a, -1.0), options);
}

QuadraticTask::QuadraticTask(DenseMatrix a, Vector x_star)
    : a_(std::move(a)), x_star_(std::move(x_star)) {
    if (!a_.square() || a_.rows() != x_star_.size() || a_.empty()) {
        throw std::invalid_argument("QuadraticTask: A must be d x d with d = len(x_star) >= 1");
    }
    for (std::size_t i = 0; i < a_.rows(); ++i)
        for (std::size_t j = i + 1; j < a_.cols(); ++j)
            if (std::abs(a_(i, j) - a_(j, i)) > 1e-12)
                throw std::invalid_argument("QuadraticTask: A is not symmetric");
    lambda_min_ = smallest_eigenvalue_symmetric(a_, 1e-8);
    if (!(lambda_min_ > 0.0)) {
        std::ostringstream msg;
        msg << "QuadraticTask: A is not positive definite (lambda_min = " << lambda_min_ << ")";
        throw std::invalid_argument(msg.str());
    }
}

double QuadraticTask::loss(std::span<const double> x) const {
    if (x.size() != dimension()) throw std::invalid_argument("QuadraticTask::loss: dimension mismatch");
    Vector diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - x_star_[i];
    return dot(diff, matvec(a_, diff));
}

Vector QuadraticTask::grad(std::span<const double> x) const {
    if (x.size() != dimension()) {
        throw std::invalid_argument("quadratic_grad: x has length " + std::to_string(x.size()) +
                                    ", expected " + std::to_string(dimension()));
    }
    Vector diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - x_star_[i];
    Vector g = matvec(a_, diff);
    for (double& v : g) v *= 2.0;
    return g;
}

std::string CorrelationSpec::name() const { return kind == Kind::toeplitz ? "toeplitz" : "block"; }

DenseMatrix make_correlation_matrix(const CorrelationSpec& spec, std::size_t d) {
    if (d == 0) throw std::invalid_argument("make_correlation_matrix: d must be >= 1");
    DenseMatrix a(d, d);
    if (spec.kind == CorrelationSpec::Kind::toeplitz) {
        if (!(std::abs(spec.rho) < 1.0)) {
            throw std::invalid_argument("make_correlation_matrix: toeplitz needs |rho| < 1");
        }
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const auto gap = static_cast<int>(i > j ? i - j : j - i);
                a(i, j) = std::pow(spec.rho, gap);
            }
    } else {
        if (spec.blocks == 0 || d % spec.blocks != 0) {
            throw std::invalid_argument("make_correlation_matrix: blocks = " +
                                        std::to_string(spec.blocks) + " must divide d = " +
                                        std::to_string(d));
        }
        const std::size_t size = d / spec.blocks;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                if (i == j) a(i, j) = 1.0;
                else a(i, j) = (i / size == j / size) ? spec.within : spec.across;
            }
    }
    const double lambda_min = smallest_eigenvalue_symmetric(a, 1e-8);
    if (!(lambda_min > 0.0)) {
        std::ostringstream msg;
        msg << "make_correlation_matrix: " << spec.name()
            << " parameters give a matrix that is not positive definite (lambda_min = " << lambda_min
            << ")";
        throw std::invalid_argument(msg.str());
    }
    return a;
}

ClassificationTask::ClassificationTask(Dataset data) : data_(std::move(data)) {
    if (data_.classes < 1) throw std::invalid_argument("ClassificationTask: need at least one class");
    if (data_.features.rows() != data_.labels.size()) {
        throw std::invalid_argument("ClassificationTask: feature rows and labels differ in count");
    }
    for (std::size_t label : data_.labels)
        if (label >= data_.classes) {
            throw std::invalid_argument("ClassificationTask: label " + std::to_string(label) +
                                        " >= classes " + std::to_string(data_.classes));
        }
}

namespace {

// Logits W f + b for one sample.
void logits(std::span<const double> x, std::size_t classes, std::span<const double> features,
            std::vector<double>& out) {
    const std::size_t dim = features.size();
    out.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const double* w = x.data() + c * dim;
        double z = x[classes * dim + c];
        for (std::size_t f = 0; f < dim; ++f) z += w[f] * features[f];
        out[c] = z;
    }
}

void check_params(const ClassificationTask& task, std::span<const double> x, const Dataset& set) {
    if (x.size() != task.dimension()) {
        throw std::invalid_argument("softmax model: parameter vector has length " +
                                    std::to_string(x.size()) + ", expected " +
                                    std::to_string(task.dimension()));
    }
    if (set.feature_dim() != task.data().feature_dim() || set.classes != task.data().classes) {
        throw std::invalid_argument("softmax model: dataset shape does not match the task");
    }
}

// Cross-entropy of one sample; fills probabilities.
double sample_loss(std::span<const double> x, const Dataset& set, std::size_t index,
                   std::vector<double>& probs) {
    logits(x, set.classes, set.features.row(index), probs);
    const double zmax = *std::max_element(probs.begin(), probs.end());
    const double z_label = probs[set.labels[index]];
    double total = 0.0;
    for (double& p : probs) {
        p = std::exp(p - zmax);
        total += p;
    }
    const double loss = std::log(total) + zmax - z_label;
    for (double& p : probs) p /= total;
    return loss;
}

}  // namespace

std::size_t ClassificationTask::predict(std::span<const double> x, const Dataset& set,
                                        std::size_t index) const {
    check_params(*this, x, set);
    std::vector<double> z;
    logits(x, set.classes, set.features.row(index), z);
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

LossGrad softmax_loss_grad(const ClassificationTask& task, std::span<const double> x,
                           std::span<const std::size_t> batch) {
    const Dataset& set = task.data();
    check_params(task, x, set);
    if (batch.empty()) throw std::invalid_argument("softmax_loss_grad: empty batch");
    const std::size_t classes = set.classes, dim = set.feature_dim();
    LossGrad out{0.0, Vector(task.dimension(), 0.0)};
    std::vector<double> probs;
    for (std::size_t index : batch) {
        if (index >= set.size()) {
            throw std::invalid_argument("softmax_loss_grad: sample index " + std::to_string(index) +
                                        " out of range (" + std::to_string(set.size()) + " samples)");
        }
        out.loss += sample_loss(x, set, index, probs);
        const auto features = set.features.row(index);
        for (std::size_t c = 0; c < classes; ++c) {
            const double delta = probs[c] - (set.labels[index] == c ? 1.0 : 0.0);
            double* gw = out.grad.data() + c * dim;
            for (std::size_t f = 0; f < dim; ++f) gw[f] += delta * features[f];
            out.grad[classes * dim + c] += delta;
        }
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    out.loss *= scale;
    for (double& g : out.grad) g *= scale;
    return out;
}

double softmax_loss(const ClassificationTask& task, std::span<const double> x, const Dataset& set) {
    check_params(task, x, set);
    if (set.size() == 0) throw std::invalid_argument("softmax_loss: empty dataset");
    std::vector<double> probs;
    double total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) total += sample_loss(x, set, i, probs);
    return total / static_cast<double>(set.size());
}

double accuracy(const ClassificationTask& task, std::span<const double> x, const Dataset& set) {
    check_params(task, x, set);
    if (set.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
    std::size_t correct = 0;
    std::vector<double> z;
    for (std::size_t i = 0; i < set.size(); ++i) {
        logits(x, set.classes, set.features.row(i), z);
        const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
        if (best == set.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(set.size());
}

Partition dirichlet_partition(std::span<const std::size_t> labels, std::size_t n, double alpha,
                              Rng& rng) {
    if (n < 1) throw std::invalid_argument("dirichlet_partition: need n >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be > 0");
    if (labels.size() < n) {
        throw std::invalid_argument("dirichlet_partition: " + std::to_string(labels.size()) +
                                    " samples cannot cover " + std::to_string(n) + " nodes");
    }
    const std::size_t classes =
        labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Partition parts(n);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> share(n);
    std::vector<std::size_t> counts(n);
    std::vector<std::pair<double, std::size_t>> remainders(n);
    for (auto& members : by_class) {
        if (members.empty()) continue;
        std::shuffle(members.begin(), members.end(), rng);
        double total = 0.0;
        for (double& s : share) {
            s = gamma(rng);
            total += s;
        }
        if (!(total > 0.0)) {
            // Every draw underflowed: the limit of Dirichlet(alpha -> 0) is a
            // point mass on one node.
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::fill(share.begin(), share.end(), 0.0);
            share[pick(rng)] = 1.0;
            total = 1.0;
        }
        const auto m = static_cast<double>(members.size());
        std::size_t assigned = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double exact = share[i] / total * m;
            counts[i] = static_cast<std::size_t>(std::floor(exact));
            remainders[i] = {exact - static_cast<double>(counts[i]), i};
            assigned += counts[i];
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t r = 0; assigned < members.size(); ++r, ++assigned) ++counts[remainders[r % n].second];
        std::size_t offset = 0;
        for (std::size_t i = 0; i < n; ++i) {
            parts[i].insert(parts[i].end(), members.begin() + static_cast<std::ptrdiff_t>(offset),
                            members.begin() + static_cast<std::ptrdiff_t>(offset + counts[i]));
            offset += counts[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!parts[i].empty()) continue;
        auto largest = std::max_element(parts.begin(), parts.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
        parts[i].push_back(largest->back());
        largest->pop_back();
    }
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return parts;
}

Partition iid_partition(std::size_t samples, std::size_t n, Rng& rng) {
    if (n < 1 || samples < n) throw std::invalid_argument("iid_partition: need 1 <= n <= samples");
    std::vector<std::size_t> order(samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    Partition parts(n);
    for (std::size_t i = 0; i < samples; ++i) parts[i % n].push_back(order[i]);
    for (auto& p : parts) std::sort(p.begin(), p.end());
    return parts;
}

Dataset synth_dataset(std::size_t classes, std::size_t dim, std::size_t per_class, double spread,
                      Rng& rng) {
    if (classes < 1 || dim < 1 || per_class < 1) {
        throw std::invalid_argument("synth_dataset: classes, dim and per_class must be >= 1");
    }
    if (classes > dim) {
        throw std::invalid_argument("synth_dataset: classes (" + std::to_string(classes) +
                                    ") must not exceed dim (" + std::to_string(dim) + ")");
    }
    if (!(spread >= 0.0)) throw std::invalid_argument("synth_dataset: spread must be >= 0");
    Dataset data{DenseMatrix(classes * per_class, dim), {}, classes};
    data.labels.reserve(classes * per_class);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s) {
            const std::size_t row = c * per_class + s;
            for (std::size_t f = 0; f < dim; ++f) {
                const double mean = f == c ? 1.0 : 0.0;
                data.features(row, f) = mean + (spread > 0.0 ? spread * noise(rng) : 0.0);
            }
            data.labels.push_back(c);
        }
    }
    return data;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << "# classes=" << data.classes << "\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.features.row(i)) out << v << ',';
        out << data.labels[i] << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::size_t classes = 0;
    std::size_t dim = 0;
    std::vector<double> features;
    std::vector<std::size_t> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line.rfind("# classes=", 0) == 0) classes = std::stoul(line.substr(10));
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
        if (fields.size() < 2) throw std::runtime_error("malformed dataset row in '" + path.string() + "'");
        if (dim == 0) dim = fields.size() - 1;
        if (fields.size() - 1 != dim) throw std::runtime_error("ragged dataset rows in '" + path.string() + "'");
        for (std::size_t f = 0; f < dim; ++f) features.push_back(std::stod(fields[f]));
        labels.push_back(std::stoul(fields.back()));
    }
    if (classes == 0 && !labels.empty()) classes = *std::max_element(labels.begin(), labels.end()) + 1;
    const std::size_t rows = labels.size();
    return Dataset{DenseMatrix(rows, dim, std::move(features)), std::move(labels), classes};
}

}  // namespace mosaic
