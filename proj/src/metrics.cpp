#include "mosaic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mosaic {

double beta_s(std::size_t s, std::size_t n) {
    if (n < 2) throw std::invalid_argument("beta_s: need n >= 2");
    if (s < 1 || s > n - 1) {
        throw std::invalid_argument("beta_s: s = " + std::to_string(s) + " outside [1, " +
                                    std::to_string(n - 1) + "]");
    }
    const double peers = static_cast<double>(n - 1);
    const double miss = 1.0 - static_cast<double>(s) / peers;
    return (1.0 - std::pow(miss, static_cast<double>(n))) / static_cast<double>(s) - 1.0 / peers;
}

double consensus_distance(const StackedState& states) {
    if (states.nodes() == 0) throw std::invalid_argument("consensus_distance: no nodes");
    const auto avg = states.average();
    double total = 0.0;
    for (std::size_t i = 0; i < states.nodes(); ++i) {
        const auto x = states.node(i);
        double sq = 0.0;
        for (std::size_t p = 0; p < avg.size(); ++p) sq += (x[p] - avg[p]) * (x[p] - avg[p]);
        total += std::sqrt(sq);
    }
    return total / static_cast<double>(states.nodes());
}

double consensus_sq(const StackedState& states) {
    const auto avg = states.average();
    double total = 0.0;
    for (std::size_t i = 0; i < states.nodes(); ++i) {
        const auto x = states.node(i);
        for (std::size_t p = 0; p < avg.size(); ++p) total += (x[p] - avg[p]) * (x[p] - avg[p]);
    }
    return total;
}

double pairwise_disagreement(const StackedState& states) {
    // (1/n^2) sum_{i,j} ||x_i - x_j||^2 = (2/n) sum_i ||x_i - x_bar||^2
    const auto n = static_cast<double>(states.nodes());
    return 2.0 * consensus_sq(states) / n;
}

std::vector<double> per_node_eval(const StackedState& states, const PerfFn& perf) {
    std::vector<double> out(states.nodes());
    for (std::size_t i = 0; i < states.nodes(); ++i) out[i] = perf(states.node(i));
    return out;
}

double node_average_eval(const StackedState& states, const PerfFn& perf) {
    const auto values = per_node_eval(states, perf);
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

double model_average_eval(const StackedState& states, const PerfFn& perf) {
    const auto avg = states.average();
    return perf(avg);
}

double node_average_eval(const StackedState& states, const ClassificationTask& task,
                         const Dataset& testset) {
    return node_average_eval(states, [&](std::span<const double> x) { return accuracy(task, x, testset); });
}

double model_average_eval(const StackedState& states, const ClassificationTask& task,
                          const Dataset& testset) {
    return model_average_eval(states, [&](std::span<const double> x) { return accuracy(task, x, testset); });
}

double node_average_eval(const StackedState& states, const QuadraticTask& task) {
    return node_average_eval(states, [&](std::span<const double> x) { return task.loss(x); });
}

double model_average_eval(const StackedState& states, const QuadraticTask& task) {
    return model_average_eval(states, [&](std::span<const double> x) { return task.loss(x); });
}

double node_perf_stddev(std::span<const double> per_node_perf) {
    if (per_node_perf.empty()) throw std::invalid_argument("node_perf_stddev: no values");
    const auto n = static_cast<double>(per_node_perf.size());
    double mean = 0.0;
    for (double v : per_node_perf) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : per_node_perf) var += (v - mean) * (v - mean);
    return std::sqrt(var / n);
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace(const MetricsTrace& trace, const std::filesystem::path& path,
                 const std::vector<std::string>& comments) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    for (const auto& c : comments) out << "# " << c << '\n';
    out << kTraceHeader << '\n';
    for (const auto& r : trace.rows) {
        out << r.round << ',' << format_real(r.node_avg) << ',' << format_real(r.model_avg) << ','
            << format_real(r.consensus_dist) << ',' << format_real(r.node_stddev) << ','
            << format_real(r.global_loss) << '\n';
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

MetricsTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    MetricsTrace trace;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != kTraceHeader) throw std::runtime_error("unexpected trace header in '" + path.string() + "'");
            header_seen = true;
            continue;
        }
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6) throw std::runtime_error("malformed trace row in '" + path.string() + "'");
        MetricsRow row;
        row.round = std::stoul(fields[0]);
        row.node_avg = std::stod(fields[1]);
        row.model_avg = std::stod(fields[2]);
        row.consensus_dist = std::stod(fields[3]);
        row.node_stddev = std::stod(fields[4]);
        row.global_loss = std::stod(fields[5]);
        trace.rows.push_back(row);
    }
    if (!header_seen) throw std::runtime_error("missing trace header in '" + path.string() + "'");
    return trace;
}

}  // namespace mosaic
