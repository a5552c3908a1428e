#include "mosaic/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mosaic/config.hpp"
#include "mosaic/engine.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/spectral.hpp"

namespace mosaic {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> header_comments(const nlohmann::json& resolved) {
    return {"schema_version: " + std::to_string(kSchemaVersion), "config: " + resolved.dump()};
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

class CsvFile {
public:
    CsvFile(const fs::path& path, const std::vector<std::string>& comments, const std::string& header)
        : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
        for (const auto& c : comments) out_ << "# " << c << '\n';
        out_ << header << '\n';
    }

    std::ostream& row() { return out_; }

    void close() {
        out_.flush();
        if (!out_) throw IoError("write failed for '" + path_.string() + "'");
        out_.close();
    }

private:
    fs::path path_;
    std::ofstream out_;
};

void write_trace_file(const MetricsTrace& trace, const fs::path& path, const std::vector<std::string>& comments) {
    try {
        write_trace(trace, path, comments);
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
}

void write_state(const StackedState& state, const fs::path& path, const std::vector<std::string>& comments) {
    std::string header = "node";
    for (std::size_t p = 0; p < state.dimension(); ++p) header += ",x" + std::to_string(p);
    CsvFile f(path, comments, header);
    for (std::size_t i = 0; i < state.nodes(); ++i) {
        f.row() << i;
        for (double v : state.node(i)) f.row() << ',' << format_real(v);
        f.row() << '\n';
    }
    f.close();
}

// Maps exceptions to exit codes and reports them.
int guarded(std::ostream& log, const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DivergenceError& e) {
        log << "diverged: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const IoError& e) {
        log << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        log << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

ConfigFile load(const CommandOptions& options) {
    ConfigFile config = load_config(options.config);
    if (options.seed) override_seed(config, *options.seed);
    return config;
}

std::string alpha_label(const std::optional<double>& alpha) {
    if (!alpha) return "iid";
    std::ostringstream s;
    s << *alpha;
    return s.str();
}

struct Cell {
    ExperimentConfig config;
    std::string name;
    int status = kExitOk;
    std::string message;
    std::optional<MetricsRow> last;
};

void run_cell(Cell& cell, const fs::path& out) {
    const fs::path dir = out / cell.name;
    std::ostringstream log;
    cell.status = guarded(log, [&] {
        ensure_dir(dir);
        nlohmann::json resolved{{"schema_version", kSchemaVersion}, {"experiment", to_json(cell.config)}};
        const RunResult result = run(cell.config);
        write_trace_file(result.trace, dir / "trace.csv", header_comments(resolved));
        if (!result.trace.rows.empty()) cell.last = result.trace.rows.back();
    });
    cell.message = log.str();
    while (!cell.message.empty() && cell.message.back() == '\n') cell.message.pop_back();
}

const char* status_name(int status) {
    switch (status) {
        case kExitOk: return "ok";
        case kExitConfig: return "config_error";
        case kExitDivergence: return "diverged";
        case kExitIo: return "io_error";
        default: return "failed";
    }
}

}  // namespace

int cmd_train(const CommandOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        const ConfigFile config = load(options);
        if (!config.experiment) throw ConfigError("train needs an 'experiment' section");
        const ExperimentConfig& exp = *config.experiment;
        ensure_dir(options.out);
        const auto comments = header_comments(to_json(config));
        const RunResult result = run(exp);
        write_trace_file(result.trace, options.out / "trace.csv", comments);
        write_state(result.final_state, options.out / "final_state.csv", comments);
        log << "train: " << result.trace.rows.size() << " metric rows written to " << options.out.string() << '\n';
    });
}

int cmd_spectral(const CommandOptions& options, std::ostream& log) {
    return guarded(log, [&] {
        const ConfigFile config = load(options);
        if (!config.spectral) throw ConfigError("spectral needs a 'spectral' section");
        const SpectralConfig& sc = *config.spectral;
        ensure_dir(options.out);
        const auto comments = header_comments(to_json(config));
        const bool suffix = sc.correlations.size() > 1;
        for (const auto& nc : sc.correlations) {
            SpectralSetup setup = sc.setup;
            setup.correlation = nc.spec;
            const std::string tag = suffix ? "_" + nc.name : "";

            const auto reports = sweep_K(setup, sc.fragments, sc.seeds);
            CsvFile rho(options.out / ("rho_vs_K" + tag + ".csv"), comments, "K,seed,rho");
            for (const auto& r : reports) rho.row() << r.fragments << ',' << r.seed << ',' << format_real(r.rho) << '\n';
            rho.close();

            std::vector<std::size_t> ks = sc.fragments;
            std::sort(ks.begin(), ks.end());
            std::vector<std::uint64_t> seeds = sc.seeds;
            std::sort(seeds.begin(), seeds.end());
            CsvFile cons(options.out / ("consensus_vs_round" + tag + ".csv"), comments, "K,seed,round,consensus_sq");
            for (std::size_t k : ks) {
                for (std::uint64_t seed : seeds) {
                    const Vector e0 = initial_disagreement(setup.nodes, setup.dimension, seed);
                    const auto trace = consensus_recursion(e0, setup, k, sc.rounds, seed);
                    for (std::size_t t = 0; t < trace.size(); ++t)
                        cons.row() << k << ',' << seed << ',' << t << ',' << format_real(trace[t]) << '\n';
                }
            }
            cons.close();
            log << "spectral[" << nc.name << "]: " << reports.size() << " rho rows\n";
        }
    });
}

int cmd_sweep(const CommandOptions& options, std::ostream& log) {
    int worst = kExitOk;
    const int setup_status = guarded(log, [&] {
        const ConfigFile config = load(options);
        if (!config.experiment) throw ConfigError("sweep needs an 'experiment' section");
        const ExperimentConfig& base = *config.experiment;
        SweepAxes axes = config.sweep.value_or(SweepAxes{});
        if (axes.fragments.empty()) axes.fragments = {base.fragments};
        if (axes.degree.empty()) axes.degree = {base.degree};
        if (axes.alpha.empty()) axes.alpha = {base.task.alpha};
        if (axes.seeds.empty()) axes.seeds = {base.seed};

        std::vector<Cell> cells;
        for (std::size_t k : axes.fragments)
            for (std::size_t deg : axes.degree)
                for (const auto& alpha : axes.alpha)
                    for (std::uint64_t seed : axes.seeds) {
                        Cell cell;
                        cell.config = base;
                        cell.config.fragments = k;
                        cell.config.degree = deg;
                        cell.config.task.alpha = alpha;
                        cell.config.seed = seed;
                        std::ostringstream name;
                        name << "cell_" << cells.size() << "_K" << k << "_deg" << deg << "_alpha"
                             << alpha_label(alpha) << "_seed" << seed;
                        cell.name = name.str();
                        cells.push_back(std::move(cell));
                    }
        ensure_dir(options.out);

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(cells[i], options.out);
        };
        const std::size_t threads = std::max<std::size_t>(1, std::min(options.parallel, cells.size()));
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();

        CsvFile summary(options.out / "summary.csv", header_comments(to_json(config)),
                        "cell,fragments,degree,alpha,seed,status," + std::string(kTraceHeader));
        std::size_t failed = 0;
        for (const auto& cell : cells) {
            const auto& c = cell.config;
            summary.row() << cell.name << ',' << c.fragments << ',' << c.degree << ',' << alpha_label(c.task.alpha)
                          << ',' << c.seed << ',' << status_name(cell.status) << ',';
            if (cell.last) {
                const auto& r = *cell.last;
                summary.row() << r.round << ',' << format_real(r.node_avg) << ',' << format_real(r.model_avg)
                              << ',' << format_real(r.consensus_dist) << ',' << format_real(r.node_stddev) << ','
                              << format_real(r.global_loss) << '\n';
            } else {
                summary.row() << ",,,,,\n";
            }
            if (cell.status != kExitOk) {
                ++failed;
                worst = std::max(worst, cell.status);
                log << cell.name << ": " << cell.message << '\n';
            }
        }
        summary.close();
        log << "sweep: " << cells.size() << " cells, " << failed << " failed\n";
    });
    return setup_status != kExitOk ? setup_status : worst;
}

}  // namespace mosaic
