#pragma once

// Round-based simulation of fragmented decentralized SGD: H local steps per
// node, then every fragment is gossiped along its own communication matrix
// and averaged fragment-wise.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mosaic/fragmentation.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/rng.hpp"
#include "mosaic/state.hpp"
#include "mosaic/tasks.hpp"
#include "mosaic/topology.hpp"

namespace mosaic {

// A node's slice of the classification data.
struct ShardTask {
    std::shared_ptr<const ClassificationTask> task;
    std::vector<std::size_t> shard;  // indices into task->data()
    std::size_t batch_size = 1;
};

using Task = std::variant<QuadraticTask, ShardTask>;

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t round, std::size_t node)
        : std::runtime_error("non-finite model at round " + std::to_string(round) + " on node " +
                             std::to_string(node) + "; try a smaller step size (eta)"),
          round(round),
          node(node) {}

    std::size_t round;
    std::size_t node;
};

// H steps of x <- x - eta * g. Stochastic tasks draw batch_size samples from
// the shard with replacement at every step. Throws DivergenceError (tagged
// with `round` and `node`) when an iterate becomes non-finite.
Vector local_update(std::span<const double> x, const Task& task, std::size_t local_steps,
                    double eta, Rng& rng, std::size_t round = 0, std::size_t node = 0);

// New fragment-k slice of node i = sum_j W_k[i,j] * (fragment-k slice of
// node j). Requires one n x n matrix per fragment.
StackedState exchange_and_aggregate(const StackedState& states, std::span<const GossipMatrix> ws,
                                    const FragmentMap& map);

struct TaskConfig {
    enum class Kind { quadratic, softmax };
    Kind kind = Kind::quadratic;

    // quadratic
    std::size_t dimension = 16;
    CorrelationSpec correlation;

    // softmax
    std::size_t classes = 4;
    std::size_t feature_dim = 16;
    std::size_t train_per_class = 200;
    std::size_t test_per_class = 100;
    double spread = 0.5;
    std::size_t batch_size = 8;
    std::optional<double> alpha;  // Dirichlet concentration; empty means IID

    // Parameter count of the model.
    std::size_t model_dimension() const;
};

enum class InitMode { shared, independent };

struct ExperimentConfig {
    std::size_t nodes = 16;
    std::size_t fragments = 1;
    FragmentScheme scheme = FragmentScheme::contiguous;
    std::size_t local_steps = 1;
    double eta = 0.01;
    // Quadratic tasks only: the step size is eta / lambda_max(A), so
    // eta = 0.25 gives 1/(4 lambda_max).
    bool eta_relative = false;
    std::size_t rounds = 100;
    TopologyMode topology = TopologyMode::el_local;
    std::size_t degree = 2;
    bool static_topology = false;
    TaskConfig task;
    InitMode init = InitMode::shared;
    double init_scale = 1.0;
    std::uint64_t seed = 0;
    std::size_t metrics_every = 1;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// Everything a run needs that is derived from the config and the seed.
struct Problem {
    FragmentMap fragment_map;
    std::vector<Task> node_tasks;
    StackedState initial;
    double eta = 0.0;
    // Set for quadratic runs.
    std::optional<QuadraticTask> quadratic;
    // Set for softmax runs.
    std::shared_ptr<const ClassificationTask> classification;
    std::optional<Dataset> testset;
    Partition partition;
};

Problem build_problem(const ExperimentConfig& config);

struct RunResult {
    MetricsTrace trace;
    StackedState final_state;
};

// Metrics row for the current state (round number supplied by the caller).
MetricsRow evaluate(const Problem& problem, const StackedState& states, std::size_t round);

// Runs config.rounds rounds. Metrics are recorded after every
// metrics_every-th round and after the last round. Deterministic in
// (config, seed).
RunResult run(const ExperimentConfig& config);
RunResult run(const ExperimentConfig& config, const Problem& problem);

}  // namespace mosaic
