#pragma once

// Evaluation metrics and trace serialization.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mosaic/state.hpp"
#include "mosaic/tasks.hpp"

namespace mosaic {

// Mixing constant of EL-Local gossip with out-degree s on n nodes:
// (1/s)(1 - (1 - s/(n-1))^n) - 1/(n-1). Requires n >= 2 and 1 <= s <= n-1.
double beta_s(std::size_t s, std::size_t n);

// Mean Euclidean distance of the node models from their average.
double consensus_distance(const StackedState& states);

// Squared stacked norm ||X - X_bar||^2 (sum over nodes of squared distances).
double consensus_sq(const StackedState& states);

// Pairwise disagreement (1/n^2) sum_{i,j} ||x_i - x_j||^2.
double pairwise_disagreement(const StackedState& states);

using PerfFn = std::function<double(std::span<const double>)>;

std::vector<double> per_node_eval(const StackedState& states, const PerfFn& perf);
double node_average_eval(const StackedState& states, const PerfFn& perf);
double model_average_eval(const StackedState& states, const PerfFn& perf);

// Classification: test accuracy. Quadratic: loss.
double node_average_eval(const StackedState& states, const ClassificationTask& task,
                         const Dataset& testset);
double model_average_eval(const StackedState& states, const ClassificationTask& task,
                          const Dataset& testset);
double node_average_eval(const StackedState& states, const QuadraticTask& task);
double model_average_eval(const StackedState& states, const QuadraticTask& task);

// Population standard deviation.
double node_perf_stddev(std::span<const double> per_node_perf);

struct MetricsRow {
    std::size_t round = 0;
    double node_avg = 0.0;
    double model_avg = 0.0;
    double consensus_dist = 0.0;
    double node_stddev = 0.0;
    double global_loss = 0.0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct MetricsTrace {
    std::vector<MetricsRow> rows;
};

inline constexpr const char* kTraceHeader =
    "round,node_avg,model_avg,consensus_dist,node_stddev,global_loss";

// CSV with `comments` emitted first as '#'-prefixed lines, then the header
// and one row per record. Reals use 17 significant digits. Throws
// std::runtime_error naming the path on I/O failure.
void write_trace(const MetricsTrace& trace, const std::filesystem::path& path,
                 const std::vector<std::string>& comments = {});
MetricsTrace read_trace(const std::filesystem::path& path);

// Formats a real with 17 significant digits.
std::string format_real(double v);

}  // namespace mosaic
