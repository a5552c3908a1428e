#include "mosaic/engine.hpp"

#include <cmath>
#include <stdexcept>

namespace mosaic {

Vector local_update(std::span<const double> x, const Task& task, std::size_t local_steps,
                    double eta, Rng& rng, std::size_t round, std::size_t node) {
    if (local_steps < 1) throw std::invalid_argument("local_update: need H >= 1");
    Vector cur(x.begin(), x.end());
    std::vector<std::size_t> batch;
    for (std::size_t h = 0; h < local_steps; ++h) {
        Vector g;
        if (const auto* quad = std::get_if<QuadraticTask>(&task)) {
            g = quad->grad(cur);
        } else {
            const auto& shard = std::get<ShardTask>(task);
            if (shard.shard.empty()) throw std::invalid_argument("local_update: empty shard");
            std::uniform_int_distribution<std::size_t> pick(0, shard.shard.size() - 1);
            batch.resize(shard.batch_size);
            for (auto& b : batch) b = shard.shard[pick(rng)];
            g = softmax_loss_grad(*shard.task, cur, batch).grad;
        }
        for (std::size_t p = 0; p < cur.size(); ++p) {
            cur[p] -= eta * g[p];
            if (!std::isfinite(cur[p])) throw DivergenceError(round, node);
        }
    }
    return cur;
}

StackedState exchange_and_aggregate(const StackedState& states, std::span<const GossipMatrix> ws,
                                    const FragmentMap& map) {
    const std::size_t n = states.nodes();
    if (ws.size() != map.fragments()) {
        throw std::invalid_argument("exchange_and_aggregate: " + std::to_string(ws.size()) +
                                    " gossip matrices for " + std::to_string(map.fragments()) +
                                    " fragments");
    }
    if (states.dimension() != map.dimension()) {
        throw std::invalid_argument("exchange_and_aggregate: state dimension does not match the fragment map");
    }
    for (const auto& w : ws) {
        if (w.weights.rows() != n || w.weights.cols() != n) {
            throw std::invalid_argument("exchange_and_aggregate: gossip matrix is not " +
                                        std::to_string(n) + " x " + std::to_string(n));
        }
    }
    StackedState next(n, states.dimension());
    for (std::size_t k = 0; k < map.fragments(); ++k) {
        const auto& coords = map.coordinates(k);
        const DenseMatrix& w = ws[k].weights;
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = next.node(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double wij = w(i, j);
                if (wij == 0.0) continue;
                const auto src = states.node(j);
                for (std::size_t p : coords) dst[p] += wij * src[p];
            }
        }
    }
    return next;
}

std::size_t TaskConfig::model_dimension() const {
    return kind == Kind::quadratic ? dimension : classes * (feature_dim + 1);
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("config: " + field + " " + why);
    };
    const std::size_t d = task.model_dimension();
    if (nodes < 1) fail("nodes", "must be >= 1");
    if (d < 1) fail("task", "has no parameters");
    if (fragments < 1 || fragments > d) fail("fragments", "must lie in [1, d = " + std::to_string(d) + "]");
    if (scheme != FragmentScheme::shuffled && d % fragments != 0)
        fail("fragments", "must divide d = " + std::to_string(d) + " for scheme " + to_string(scheme));
    if (local_steps < 1) fail("local_steps", "must be >= 1");
    if (!(eta >= 0.0) || !std::isfinite(eta)) fail("eta", "must be finite and >= 0");
    if (eta_relative && task.kind != TaskConfig::Kind::quadratic)
        fail("eta", "relative step size requires a quadratic task");
    if (rounds < 1) fail("rounds", "must be >= 1");
    if (metrics_every < 1) fail("metrics_every", "must be >= 1");
    if (!(init_scale >= 0.0)) fail("init_scale", "must be >= 0");
    if (topology == TopologyMode::el_local && (nodes < 2 || degree < 1 || degree > nodes - 1))
        fail("degree", "must lie in [1, nodes - 1] for el_local");
    if (topology == TopologyMode::regular && (degree >= nodes || (nodes * degree) % 2 != 0))
        fail("degree", "must be < nodes with nodes * degree even for regular");
    if (task.kind == TaskConfig::Kind::softmax) {
        if (task.classes < 1 || task.feature_dim < task.classes)
            fail("task.classes", "must lie in [1, feature_dim]");
        if (task.train_per_class < 1 || task.test_per_class < 1)
            fail("task.train_per_class", "and test_per_class must be >= 1");
        if (task.classes * task.train_per_class < nodes)
            fail("task.train_per_class", "gives fewer samples than nodes");
        if (task.batch_size < 1) fail("task.batch_size", "must be >= 1");
        if (task.alpha && !(*task.alpha > 0.0)) fail("task.alpha", "must be > 0");
    }
}

namespace {

Vector gaussian_vector(std::size_t d, double scale, Rng rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(d);
    for (double& x : v) x = scale * normal(rng);
    return v;
}

}  // namespace

Problem build_problem(const ExperimentConfig& config) {
    config.validate();
    const std::size_t n = config.nodes;
    const std::size_t d = config.task.model_dimension();
    Problem problem{make_fragment_map(d, config.fragments, config.scheme, config.seed), {}, {}, config.eta,
                    std::nullopt, nullptr, std::nullopt, {}};

    if (config.task.kind == TaskConfig::Kind::quadratic) {
        DenseMatrix a = make_correlation_matrix(config.task.correlation, d);
        Vector x_star = gaussian_vector(d, 1.0, make_stream(config.seed, StreamPurpose::dataset));
        problem.quadratic.emplace(std::move(a), std::move(x_star));
        if (config.eta_relative) {
            problem.eta = config.eta / largest_eigenvalue_symmetric(problem.quadratic->correlation());
        }
        problem.node_tasks.assign(n, *problem.quadratic);
    } else {
        const auto& t = config.task;
        Rng train_rng = make_stream(config.seed, StreamPurpose::dataset, 0, 0);
        Rng test_rng = make_stream(config.seed, StreamPurpose::dataset, 0, 1);
        auto task = std::make_shared<const ClassificationTask>(
            synth_dataset(t.classes, t.feature_dim, t.train_per_class, t.spread, train_rng));
        problem.testset = synth_dataset(t.classes, t.feature_dim, t.test_per_class, t.spread, test_rng);
        Rng part_rng = make_stream(config.seed, StreamPurpose::partition);
        problem.partition = t.alpha ? dirichlet_partition(task->data().labels, n, *t.alpha, part_rng)
                                    : iid_partition(task->data().size(), n, part_rng);
        for (std::size_t i = 0; i < n; ++i)
            problem.node_tasks.emplace_back(ShardTask{task, problem.partition[i], t.batch_size});
        problem.classification = std::move(task);
    }

    if (config.init == InitMode::shared) {
        problem.initial = StackedState::replicated(
            n, gaussian_vector(d, config.init_scale, make_stream(config.seed, StreamPurpose::init, 0, 0)));
    } else {
        problem.initial = StackedState(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            const Vector x = gaussian_vector(d, config.init_scale,
                                             make_stream(config.seed, StreamPurpose::init, 0, i));
            std::copy(x.begin(), x.end(), problem.initial.node(i).begin());
        }
    }
    return problem;
}

MetricsRow evaluate(const Problem& problem, const StackedState& states, std::size_t round) {
    MetricsRow row;
    row.round = round;
    row.consensus_dist = consensus_distance(states);
    const Vector avg = states.average();
    std::vector<double> per_node;
    if (problem.quadratic) {
        const auto& q = *problem.quadratic;
        per_node = per_node_eval(states, [&](std::span<const double> x) { return q.loss(x); });
        row.model_avg = q.loss(avg);
        row.global_loss = row.model_avg;
    } else {
        const auto& task = *problem.classification;
        const Dataset& test = *problem.testset;
        per_node = per_node_eval(states, [&](std::span<const double> x) { return accuracy(task, x, test); });
        row.model_avg = accuracy(task, avg, test);
        // F(x_bar) = (1/n) sum_i f_i(x_bar), f_i the mean loss on shard i.
        double total = 0.0;
        for (const auto& shard : problem.partition) total += softmax_loss_grad(task, avg, shard).loss;
        row.global_loss = total / static_cast<double>(problem.partition.size());
    }
    double sum = 0.0;
    for (double v : per_node) sum += v;
    row.node_avg = sum / static_cast<double>(per_node.size());
    row.node_stddev = node_perf_stddev(per_node);
    return row;
}

RunResult run(const ExperimentConfig& config) { return run(config, build_problem(config)); }

RunResult run(const ExperimentConfig& config, const Problem& problem) {
    const std::size_t n = config.nodes;
    StackedState states = problem.initial;
    StackedState half(n, states.dimension());
    MetricsTrace trace;
    std::vector<GossipMatrix> fixed;
    if (config.static_topology) {
        fixed = sample_fragment_matrices(n, config.degree, config.fragments, config.topology, config.seed, 0);
    }
    for (std::size_t t = 0; t < config.rounds; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng = make_stream(config.seed, StreamPurpose::local_sgd, t, i);
            const Vector x = local_update(states.node(i), problem.node_tasks[i], config.local_steps,
                                          problem.eta, rng, t, i);
            std::copy(x.begin(), x.end(), half.node(i).begin());
        }
        if (config.static_topology) {
            states = exchange_and_aggregate(half, fixed, problem.fragment_map);
        } else {
            const auto ws = sample_fragment_matrices(n, config.degree, config.fragments, config.topology,
                                                     config.seed, t);
            states = exchange_and_aggregate(half, ws, problem.fragment_map);
        }
        const std::size_t done = t + 1;
        if (done % config.metrics_every == 0 || done == config.rounds) {
            trace.rows.push_back(evaluate(problem, states, done));
        }
    }
    return RunResult{std::move(trace), std::move(states)};
}

}  // namespace mosaic
