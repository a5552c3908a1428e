#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mosaic/commands.hpp"
#include "mosaic/config.hpp"
#include "mosaic/engine.hpp"
#include "mosaic/metrics.hpp"
#include "mosaic/spectral.hpp"
#include "reference.hpp"

using namespace mosaic;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "mosaic_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const auto path = dir / "config.json";
    std::ofstream(path) << doc.dump(2);
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Data lines of a CSV (no comments, no header), split on commas.
std::vector<std::vector<std::string>> csv_rows(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!line.empty() && line.back() == ',') fields.push_back("");
        rows.push_back(fields);
    }
    return rows;
}

json minimal_train() {
    return json{{"schema_version", 1},
                {"experiment",
                 {{"nodes", 2},
                  {"rounds", 1},
                  {"eta", 0.0},
                  {"topology", "identity"},
                  {"task", {{"kind", "quadratic"}, {"dimension", 3}}}}}};
}

json small_spectral() {
    return json{{"schema_version", 1},
                {"spectral",
                 {{"nodes", 8},
                  {"dimension", 4},
                  {"topology", "el_local"},
                  {"degree", 2},
                  {"fragments", {1, 2, 4}},
                  {"seeds", {0, 1, 2}},
                  {"rounds", 5}}}};
}

int train(const fs::path& cfg, const fs::path& out, std::string* log = nullptr) {
    std::ostringstream s;
    const int rc = cmd_train({cfg, out, std::nullopt, 1}, s);
    if (log) *log = s.str();
    return rc;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto parsed = parse_config(minimal_train());
    REQUIRE(parsed.experiment);
    CHECK(parsed.experiment->nodes == 2);
    CHECK(parsed.experiment->topology == TopologyMode::identity);
    CHECK_FALSE(parsed.spectral);

    auto doc = minimal_train();
    doc["experiment"]["task"]["colour"] = "red";
    try {
        parse_config(doc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("experiment.task.colour") != std::string::npos);
    }

    doc = minimal_train();
    doc.erase("schema_version");
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    doc["schema_version"] = 2;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);

    doc = minimal_train();
    doc["experiment"].erase("rounds");
    CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("experiment.rounds"), ConfigError);

    doc = minimal_train();
    doc["experiment"]["nodes"] = -3;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
    doc["experiment"]["nodes"] = "four";
    CHECK_THROWS_AS(parse_config(doc), ConfigError);

    doc = minimal_train();
    doc["experiment"]["fragments"] = 2;
    CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("fragments"), ConfigError);

    doc = small_spectral();
    doc["spectral"]["fragments"] = {3};
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("resolved configs round-trip") {
    auto doc = minimal_train();
    doc["experiment"]["task"] = {{"kind", "softmax"}, {"alpha", 0.1}, {"train_per_class", 10}};
    doc["experiment"]["scheme"] = "shuffled";
    doc["experiment"]["fragments"] = 5;
    doc["spectral"] = small_spectral()["spectral"];
    doc["spectral"]["correlations"] = {{{"kind", "toeplitz"}, {"rho", 0.5}, {"name", "mild"}},
                                       {{"kind", "block"}, {"blocks", 2}}};
    doc["spectral"]["eta"] = {{"policy", "fixed"}, {"value", 0.01}};
    doc["sweep"] = {{"fragments", {1, 4}}, {"alpha", {"iid", 1.0, nullptr}}};
    const auto first = parse_config(doc);
    const json resolved = to_json(first);
    const auto second = parse_config(resolved);
    CHECK(to_json(second) == resolved);
    CHECK(second.spectral->correlations[0].name == "mild");
    CHECK(second.spectral->setup.use_fixed_eta);
    CHECK(second.sweep->alpha.size() == 3);
    CHECK_FALSE(second.sweep->alpha[0].has_value());
    CHECK_FALSE(second.sweep->alpha[2].has_value());

    ConfigFile shifted = first;
    override_seed(shifted, 100);
    CHECK(shifted.experiment->seed == 100);
    CHECK(shifted.spectral->seeds == std::vector<std::uint64_t>{100, 101, 102});
}

TEST_CASE("train: minimal run, determinism and error codes") {
    const auto dir = scratch("train");
    const auto cfg = write_config(dir, minimal_train());
    REQUIRE(train(cfg, dir / "a") == kExitOk);
    REQUIRE(train(cfg, dir / "b") == kExitOk);
    CHECK(read_trace(dir / "a" / "trace.csv").rows.size() == 1);
    CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));
    CHECK(slurp(dir / "a" / "final_state.csv") == slurp(dir / "b" / "final_state.csv"));
    CHECK(csv_rows(dir / "a" / "final_state.csv").size() == 2);

    const std::string trace = slurp(dir / "a" / "trace.csv");
    CHECK(trace.rfind("# schema_version: 1\n# config: {", 0) == 0);

    auto doc = minimal_train();
    doc["experiment"]["bogus_key"] = 1;
    std::string log;
    CHECK(train(write_config(dir, doc), dir / "c", &log) == kExitConfig);
    CHECK(log.find("bogus_key") != std::string::npos);

    doc = minimal_train();
    doc["experiment"]["eta"] = 1e6;
    doc["experiment"]["rounds"] = 50;
    CHECK(train(write_config(dir, doc), dir / "d", &log) == kExitDivergence);
    CHECK(log.find("eta") != std::string::npos);

    std::ofstream(dir / "blocker") << "x";
    CHECK(train(write_config(dir, minimal_train()), dir / "blocker" / "out") == kExitIo);
    CHECK(train(dir / "does_not_exist.json", dir / "e") == kExitConfig);
}

TEST_CASE("train: seed override changes the run") {
    const auto dir = scratch("seed");
    auto doc = minimal_train();
    doc["experiment"]["eta"] = 0.1;
    doc["experiment"]["topology"] = "el_local";
    doc["experiment"]["degree"] = 1;
    const auto cfg = write_config(dir, doc);
    std::ostringstream log;
    REQUIRE(cmd_train({cfg, dir / "a", std::nullopt, 1}, log) == kExitOk);
    REQUIRE(cmd_train({cfg, dir / "b", 7, 1}, log) == kExitOk);
    CHECK(slurp(dir / "a" / "trace.csv") != slurp(dir / "b" / "trace.csv"));
    CHECK(slurp(dir / "b" / "trace.csv").find("\"seed\":7") != std::string::npos);
}

TEST_CASE("spectral: outputs and row counts") {
    const auto dir = scratch("spectral");
    std::ostringstream log;
    REQUIRE(cmd_spectral({write_config(dir, small_spectral()), dir / "one", std::nullopt, 1}, log) == kExitOk);
    const auto rho = csv_rows(dir / "one" / "rho_vs_K.csv");
    CHECK(rho.size() == 9);
    CHECK(rho.front() == std::vector<std::string>{"1", "0", rho.front()[2]});
    CHECK(csv_rows(dir / "one" / "consensus_vs_round.csv").size() == 3 * 3 * 6);
    CHECK(slurp(dir / "one" / "rho_vs_K.csv").rfind("# schema_version: 1", 0) == 0);

    auto doc = small_spectral();
    doc["spectral"]["correlations"] = {{{"kind", "toeplitz"}}, {{"kind", "block"}, {"blocks", 2}}};
    REQUIRE(cmd_spectral({write_config(dir, doc), dir / "two", std::nullopt, 1}, log) == kExitOk);
    for (const char* f : {"rho_vs_K_toeplitz.csv", "rho_vs_K_block.csv", "consensus_vs_round_toeplitz.csv",
                          "consensus_vs_round_block.csv"})
        CHECK(fs::exists(dir / "two" / f));
    CHECK(slurp(dir / "two" / "rho_vs_K_toeplitz.csv") != slurp(dir / "two" / "rho_vs_K_block.csv"));
}

TEST_CASE("spectral: K = 1 trace matches an EL-only recursion") {
    const auto dir = scratch("spectral_el");
    auto doc = small_spectral();
    doc["spectral"]["fragments"] = {1};
    doc["spectral"]["seeds"] = {4};
    doc["spectral"]["rounds"] = 8;
    const auto cfg = write_config(dir, doc);
    std::ostringstream log;
    REQUIRE(cmd_spectral({cfg, dir, std::nullopt, 1}, log) == kExitOk);
    const auto rows = csv_rows(dir / "consensus_vs_round.csv");
    REQUIRE(rows.size() == 9);

    // Reference: plain EL gossip of the whole disagreement vector after the
    // gradient factor, then mean removal.
    const std::size_t n = 8, d = 4;
    const auto a = make_correlation_matrix(CorrelationSpec{}, d);
    const double eta = 0.25 / largest_eigenvalue_symmetric(a);
    const auto e0 = initial_disagreement(n, d, 4);
    std::vector<Vector> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i].assign(e0.begin() + i * d, e0.begin() + (i + 1) * d);
    for (std::size_t t = 0; t <= 8; ++t) {
        double sq = 0.0;
        for (const auto& v : e) sq += squared_norm(v);
        CHECK(std::stod(rows[t][3]) == doctest::Approx(sq).epsilon(1e-12));
        for (auto& v : e) {
            const auto av = matvec(a, v);
            for (std::size_t p = 0; p < d; ++p) v[p] -= 2 * eta * av[p];
        }
        Rng topo = make_stream(4, StreamPurpose::topology, t, 0);
        e = reference::el_aggregate(e, reference::el_send_sets(n, 2, topo));
        Vector mean(d, 0.0);
        for (const auto& v : e)
            for (std::size_t p = 0; p < d; ++p) mean[p] += v[p] / n;
        for (auto& v : e)
            for (std::size_t p = 0; p < d; ++p) v[p] -= mean[p];
    }
}

TEST_CASE("spectral: paper-scale recipe gives 100 rho rows") {
    const auto dir = scratch("spectral_full");
    auto doc = small_spectral();
    doc["spectral"]["nodes"] = 50;
    doc["spectral"]["dimension"] = 16;
    doc["spectral"]["fragments"] = {1, 2, 4, 8, 16};
    std::vector<int> seeds(20);
    for (int i = 0; i < 20; ++i) seeds[i] = i;
    doc["spectral"]["seeds"] = seeds;
    doc["spectral"]["rounds"] = 1;
    std::ostringstream log;
    REQUIRE(cmd_spectral({write_config(dir, doc), dir, std::nullopt, 1}, log) == kExitOk);
    CHECK(csv_rows(dir / "rho_vs_K.csv").size() == 100);
}

TEST_CASE("sweep: cells, summary and failure isolation") {
    const auto dir = scratch("sweep");
    json doc{{"schema_version", 1},
             {"experiment",
              {{"nodes", 8},
               {"rounds", 6},
               {"eta", 0.1},
               {"topology", "regular"},
               {"degree", 2},
               {"scheme", "shuffled"},
               {"metrics_every", 2},
               {"task", {{"kind", "softmax"}, {"train_per_class", 20}, {"test_per_class", 10}}}}},
             {"sweep", {{"fragments", {1, 16}}, {"degree", {2, 4}}}}};
    const auto cfg = write_config(dir, doc);
    std::ostringstream log;
    REQUIRE(cmd_sweep({cfg, dir / "seq", std::nullopt, 1}, log) == kExitOk);
    REQUIRE(cmd_sweep({cfg, dir / "par", std::nullopt, 3}, log) == kExitOk);
    const auto summary = csv_rows(dir / "seq" / "summary.csv");
    REQUIRE(summary.size() == 4);
    std::size_t traces = 0;
    for (const auto& entry : fs::directory_iterator(dir / "seq"))
        if (entry.is_directory()) {
            ++traces;
            CHECK(slurp(entry.path() / "trace.csv") == slurp(dir / "par" / entry.path().filename() / "trace.csv"));
        }
    CHECK(traces == 4);
    CHECK(slurp(dir / "seq" / "summary.csv") == slurp(dir / "par" / "summary.csv"));
    for (const auto& row : summary) {
        CHECK(row[5] == "ok");
        const auto trace = read_trace(dir / "seq" / row[0] / "trace.csv");
        const auto& last = trace.rows.back();
        CHECK(std::stoul(row[6]) == last.round);
        CHECK(std::stod(row[7]) == last.node_avg);
        CHECK(std::stod(row[10]) == last.node_stddev);
        CHECK(std::stod(row[11]) == last.global_loss);
    }

    doc["sweep"] = {{"fragments", {1}}, {"alpha", {"iid", 1, 0.1}}};
    REQUIRE(cmd_sweep({write_config(dir, doc), dir / "alpha", std::nullopt, 1}, log) == kExitOk);
    const auto alpha_rows = csv_rows(dir / "alpha" / "summary.csv");
    REQUIRE(alpha_rows.size() == 3);
    CHECK(alpha_rows[0][3] == "iid");
    CHECK(alpha_rows[2][3] == "0.1");

    doc["experiment"]["scheme"] = "contiguous";
    doc["sweep"] = {{"fragments", {1, 3}}};  // 3 does not divide d = 68
    std::ostringstream flog;
    CHECK(cmd_sweep({write_config(dir, doc), dir / "fail", std::nullopt, 1}, flog) == kExitConfig);
    const auto mixed = csv_rows(dir / "fail" / "summary.csv");
    REQUIRE(mixed.size() == 2);
    CHECK(mixed[0][5] == "ok");
    CHECK(mixed[1][5] == "config_error");
    CHECK(flog.str().find("fragments") != std::string::npos);
}

#ifdef MOSAIC_CLI_PATH
TEST_CASE("command-line binary exit codes") {
    const auto dir = scratch("binary");
    const auto cfg = write_config(dir, minimal_train());
    const std::string bin = MOSAIC_CLI_PATH;
    auto run = [](const std::string& cmd) {
        const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run(bin + " train --config " + cfg.string() + " --out " + (dir / "ok").string()) == 0);
    CHECK(run(bin + " train --config " + cfg.string() + " --out " + (dir / "s").string() + " --seed 3") == 0);
    CHECK(run(bin + " train --out " + (dir / "x").string()) == 2);
    CHECK(run(bin + " bogus") == 2);
    auto doc = minimal_train();
    doc["experiment"]["typo"] = true;
    CHECK(run(bin + " train --config " + write_config(dir, doc).string() + " --out " + (dir / "y").string()) == 2);
}
#endif
