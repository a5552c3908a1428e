#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "mosaic/tasks.hpp"
#include "support.hpp"

using namespace mosaic;
using testsupport::random_spd;
using testsupport::random_vector;

namespace {

double label_entropy(const std::vector<std::size_t>& labels, std::span<const std::size_t> idx,
                     std::size_t classes) {
    std::vector<double> counts(classes, 0.0);
    for (std::size_t i : idx) counts[labels[i]] += 1.0;
    double h = 0.0;
    for (double c : counts)
        if (c > 0) {
            const double p = c / static_cast<double>(idx.size());
            h -= p * std::log(p);
        }
    return h;
}

void check_exact_partition(const Partition& parts, std::size_t samples) {
    std::vector<int> hits(samples, 0);
    for (const auto& part : parts) {
        CHECK_FALSE(part.empty());
        for (std::size_t i : part) {
            REQUIRE(i < samples);
            ++hits[i];
        }
    }
    for (int h : hits) CHECK(h == 1);
}

}  // namespace

TEST_CASE("quadratic gradient examples") {
    std::mt19937_64 rng(1);
    const auto a = random_spd(5, rng);
    const auto x_star = random_vector(5, rng);
    const QuadraticTask task(a, x_star);
    for (double g : quadratic_grad(task, x_star)) CHECK(g == 0.0);

    const QuadraticTask id(DenseMatrix::identity(3), Vector{1, 2, 3});
    CHECK(quadratic_grad(id, Vector{2, 2, 5}) == Vector{2, 0, 4});
    CHECK(id.loss(Vector{2, 2, 5}) == 5.0);
    CHECK_THROWS_AS(quadratic_grad(id, Vector{1, 2}), std::invalid_argument);
}

TEST_CASE("quadratic gradient matches central differences") {
    std::mt19937_64 rng(2);
    const auto a = random_spd(6, rng);
    const QuadraticTask task(a, random_vector(6, rng));
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        auto x = random_vector(6, rng);
        const auto g = task.grad(x);
        for (std::size_t p = 0; p < x.size(); ++p) {
            const double keep = x[p];
            x[p] = keep + h;
            const double up = task.loss(x);
            x[p] = keep - h;
            const double down = task.loss(x);
            x[p] = keep;
            CHECK(std::abs((up - down) / (2 * h) - g[p]) <= 1e-5 * std::max(1.0, std::abs(g[p])));
        }
    }
}

TEST_CASE("quadratic task validates A") {
    CHECK_THROWS_AS(QuadraticTask(DenseMatrix::from_rows({{1, 0.5}, {0.4, 1}}), Vector{0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(QuadraticTask(DenseMatrix::from_rows({{1, 2}, {2, 1}}), Vector{0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(QuadraticTask(DenseMatrix::identity(2), Vector{0, 0, 0}), std::invalid_argument);
    const QuadraticTask ok(DenseMatrix::from_rows({{2, 1}, {1, 2}}), Vector{0, 0});
    CHECK(ok.smallest_eigenvalue() == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("correlation matrices") {
    CorrelationSpec zero;
    zero.rho = 0.0;
    CHECK(make_correlation_matrix(zero, 5) == DenseMatrix::identity(5));

    CorrelationSpec half;
    half.rho = 0.5;
    CHECK(max_abs_diff(make_correlation_matrix(half, 3),
                       DenseMatrix::from_rows({{1, .5, .25}, {.5, 1, .5}, {.25, .5, 1}})) == 0.0);

    CorrelationSpec block;
    block.kind = CorrelationSpec::Kind::block;
    block.blocks = 2;
    block.within = 0.9;
    const auto a = make_correlation_matrix(block, 4);
    CHECK(a == DenseMatrix::from_rows({{1, .9, 0, 0}, {.9, 1, 0, 0}, {0, 0, 1, .9}, {0, 0, .9, 1}}));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(testsupport::to_eigen(a));
    CHECK(oracle.eigenvalues().minCoeff() == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(smallest_eigenvalue_symmetric(a) == doctest::Approx(0.1).epsilon(1e-7));

    CorrelationSpec bad = block;
    bad.blocks = 1;
    bad.within = -0.5;
    try {
        make_correlation_matrix(bad, 4);
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("lambda_min") != std::string::npos);
    }
    CorrelationSpec uneven = block;
    uneven.blocks = 3;
    CHECK_THROWS_AS(make_correlation_matrix(uneven, 4), std::invalid_argument);
    CorrelationSpec unit;
    unit.rho = 1.0;
    CHECK_THROWS_AS(make_correlation_matrix(unit, 4), std::invalid_argument);
}

TEST_CASE("documented correlation families are positive definite") {
    for (double rho : {-0.95, -0.5, 0.0, 0.3, 0.9, 0.99}) {
        CorrelationSpec s;
        s.rho = rho;
        for (std::size_t d : {1, 2, 8, 16, 32}) {
            const auto a = make_correlation_matrix(s, d);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(testsupport::to_eigen(a));
            CHECK(oracle.eigenvalues().minCoeff() > 0.0);
        }
    }
    for (double within : {0.0, 0.5, 0.8, 0.95}) {
        for (double across : {0.0, 0.05}) {
            CorrelationSpec s;
            s.kind = CorrelationSpec::Kind::block;
            s.within = within;
            s.across = across;
            const auto a = make_correlation_matrix(s, 16);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(testsupport::to_eigen(a));
            CHECK(oracle.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("softmax loss and gradient") {
    Rng rng(3);
    const ClassificationTask task(synth_dataset(3, 5, 10, 0.4, rng));
    const Vector zero(task.dimension(), 0.0);
    const std::vector<std::size_t> all{0, 5, 12, 29};
    CHECK(softmax_loss_grad(task, zero, all).loss == doctest::Approx(std::log(3.0)).epsilon(1e-14));

    std::mt19937_64 gen(4);
    const double h = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
        auto x = random_vector(task.dimension(), gen);
        const std::vector<std::size_t> one{static_cast<std::size_t>(trial * 3)};
        const auto lg = softmax_loss_grad(task, x, one);
        for (std::size_t p = 0; p < x.size(); ++p) {
            const double keep = x[p];
            x[p] = keep + h;
            const double up = softmax_loss_grad(task, x, one).loss;
            x[p] = keep - h;
            const double down = softmax_loss_grad(task, x, one).loss;
            x[p] = keep;
            CHECK(std::abs((up - down) / (2 * h) - lg.grad[p]) <= 1e-4 * std::max(1.0, std::abs(lg.grad[p])));
        }
    }

    const auto x = random_vector(task.dimension(), gen);
    const std::vector<std::size_t> batch{1, 7, 19};
    const std::vector<std::size_t> doubled{1, 7, 19, 1, 7, 19};
    const auto a = softmax_loss_grad(task, x, batch), b = softmax_loss_grad(task, x, doubled);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
    CHECK(testsupport::max_abs(a.grad, b.grad) <= 1e-14);

    CHECK_THROWS_AS(softmax_loss_grad(task, x, std::vector<std::size_t>{30}), std::invalid_argument);
    CHECK_THROWS_AS(softmax_loss_grad(task, x, std::vector<std::size_t>{}), std::invalid_argument);
    CHECK_THROWS_AS(softmax_loss_grad(task, Vector(3, 0.0), batch), std::invalid_argument);
}

TEST_CASE("softmax stays finite for large logits") {
    Rng rng(5);
    const ClassificationTask task(synth_dataset(2, 2, 3, 0.0, rng));
    Vector x(task.dimension(), 0.0);
    x[0] = 1e4;
    const auto lg = softmax_loss_grad(task, x, std::vector<std::size_t>{0, 4});
    CHECK(std::isfinite(lg.loss));
    for (double g : lg.grad) CHECK(std::isfinite(g));
}

TEST_CASE("synthetic dataset") {
    Rng rng(6);
    const auto exact = synth_dataset(3, 4, 1, 0.0, rng);
    CHECK(exact.size() == 3);
    CHECK(exact.features == DenseMatrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}}));
    CHECK(synth_dataset(4, 16, 25, 0.5, rng).size() == 100);
    Rng r1(9), r2(9);
    CHECK(synth_dataset(2, 3, 5, 0.3, r1).features == synth_dataset(2, 3, 5, 0.3, r2).features);
    CHECK_THROWS_AS(synth_dataset(5, 4, 1, 0.0, rng), std::invalid_argument);
}

TEST_CASE("noise-free data is linearly separable") {
    // Multiclass perceptron as the separator oracle; it terminates on
    // separable data and its weights are fed to the task's accuracy.
    Rng rng(7);
    const std::size_t classes = 4, dim = 6;
    const ClassificationTask task(synth_dataset(classes, dim, 5, 0.0, rng));
    const auto& data = task.data();
    Vector w(task.dimension(), 0.0);
    bool clean = false;
    for (int epoch = 0; epoch < 1000 && !clean; ++epoch) {
        clean = true;
        for (std::size_t s = 0; s < data.size(); ++s) {
            const std::size_t pred = task.predict(w, data, s), label = data.labels[s];
            if (pred == label) continue;
            clean = false;
            for (std::size_t f = 0; f < dim; ++f) {
                w[label * dim + f] += data.features(s, f);
                w[pred * dim + f] -= data.features(s, f);
            }
            w[classes * dim + label] += 1.0;
            w[classes * dim + pred] -= 1.0;
        }
    }
    CHECK(clean);
    CHECK(accuracy(task, w, data) == 1.0);
}

TEST_CASE("dirichlet partition") {
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < 4; ++c)
        for (int i = 0; i < 50; ++i) labels.push_back(c);

    Rng rng(8);
    const auto single = dirichlet_partition(labels, 1, 0.5, rng);
    REQUIRE(single.size() == 1);
    CHECK(single[0].size() == labels.size());

    for (double alpha : {0.01, 0.1, 1.0, 100.0})
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng r(seed);
            check_exact_partition(dirichlet_partition(labels, 16, alpha, r), labels.size());
        }
    Rng tight(3);
    check_exact_partition(dirichlet_partition(labels, 200, 0.01, tight), labels.size());

    CHECK_THROWS_AS(dirichlet_partition(labels, 0, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(dirichlet_partition(labels, 4, 0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(dirichlet_partition(labels, 201, 1.0, rng), std::invalid_argument);
}

TEST_CASE("dirichlet partition: large alpha approaches IID") {
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < 2; ++c)
        for (int i = 0; i < 500; ++i) labels.push_back(c);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto parts = dirichlet_partition(labels, 2, 1e6, rng);
        for (const auto& part : parts) {
            double zeros = 0;
            for (std::size_t i : part) zeros += labels[i] == 0 ? 1 : 0;
            CHECK(std::abs(zeros / static_cast<double>(part.size()) - 0.5) <= 0.05);
        }
    }
}

TEST_CASE("dirichlet partition: small alpha concentrates labels") {
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < 4; ++c)
        for (int i = 0; i < 100; ++i) labels.push_back(c);
    std::vector<std::size_t> everyone(labels.size());
    for (std::size_t i = 0; i < everyone.size(); ++i) everyone[i] = i;
    const double global = label_entropy(labels, everyone, 4);
    double mean_local = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        for (const auto& part : dirichlet_partition(labels, 4, 0.05, rng)) {
            mean_local += label_entropy(labels, part, 4);
            ++count;
        }
    }
    CHECK(mean_local / count < global);
}

TEST_CASE("iid partition and dataset csv") {
    Rng rng(10);
    const auto parts = iid_partition(103, 10, rng);
    check_exact_partition(parts, 103);
    for (const auto& p : parts) CHECK((p.size() == 10 || p.size() == 11));

    const auto data = synth_dataset(3, 4, 5, 0.7, rng);
    const auto path = std::filesystem::temp_directory_path() / "mosaic_test_dataset.csv";
    write_dataset_csv(data, path);
    const auto back = read_dataset_csv(path);
    CHECK(back.features == data.features);
    CHECK(back.labels == data.labels);
    CHECK(back.classes == data.classes);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_dataset_csv(path), std::runtime_error);
}
