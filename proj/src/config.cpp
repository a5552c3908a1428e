#include "mosaic/config.hpp"

#include <fstream>
#include <set>

namespace mosaic {

using nlohmann::json;

namespace {

bool is_count(const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); }

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class Section {
public:
    Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(where() + "must be an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T>
    void get(const std::string& key, T& out, bool required = false) {
        if (!has(key)) {
            if (required) throw ConfigError("missing required key '" + key_path(key) + "'");
            return;
        }
        const json& v = raw(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError("expected true or false");
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!is_count(v)) throw ConfigError("expected a non-negative integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw ConfigError("expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError("expected a string");
            }
            out = v.get<T>();
        } catch (const std::exception& e) {
            throw ConfigError("key '" + key_path(key) + "': " + e.what());
        }
    }

    template <class T>
    void get_list(const std::string& key, std::vector<T>& out, bool required = false) {
        if (!has(key)) {
            if (required) throw ConfigError("missing required key '" + key_path(key) + "'");
            return;
        }
        const json& v = raw(key);
        if (!v.is_array() || v.empty()) throw ConfigError("key '" + key_path(key) + "': expected a non-empty list");
        out.clear();
        for (const auto& item : v) {
            if (!is_count(item))
                throw ConfigError("key '" + key_path(key) + "': expected non-negative integers");
            out.push_back(item.get<T>());
        }
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) throw ConfigError("unknown key '" + key_path(key) + "'");
        }
    }

private:
    std::string where() const { return path_.empty() ? "config: " : "'" + path_ + "': "; }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class F>
auto parse_enum(Section& s, const std::string& key, F parse) {
    std::string name;
    s.get(key, name);
    try {
        return parse(name);
    } catch (const std::exception& e) {
        throw ConfigError("key '" + s.key_path(key) + "': " + e.what());
    }
}

CorrelationSpec parse_correlation(const json& obj, const std::string& path, std::string* name) {
    Section s(obj, path);
    CorrelationSpec spec;
    std::string kind;
    s.get("kind", kind, true);
    if (kind == "toeplitz") spec.kind = CorrelationSpec::Kind::toeplitz;
    else if (kind == "block") spec.kind = CorrelationSpec::Kind::block;
    else throw ConfigError("key '" + s.key_path("kind") + "': expected toeplitz or block, got '" + kind + "'");
    s.get("rho", spec.rho);
    s.get("blocks", spec.blocks);
    s.get("within", spec.within);
    s.get("across", spec.across);
    if (name) {
        *name = spec.name();
        s.get("name", *name);
    }
    s.finish();
    return spec;
}

std::optional<double> parse_alpha(const json& v, const std::string& path) {
    if (v.is_null() || (v.is_string() && v.get<std::string>() == "iid")) return std::nullopt;
    if (!v.is_number()) throw ConfigError("key '" + path + "': expected a number, \"iid\" or null");
    return v.get<double>();
}

TaskConfig parse_task(const json& obj, const std::string& path) {
    Section s(obj, path);
    TaskConfig t;
    std::string kind;
    s.get("kind", kind, true);
    if (kind == "quadratic") t.kind = TaskConfig::Kind::quadratic;
    else if (kind == "softmax") t.kind = TaskConfig::Kind::softmax;
    else throw ConfigError("key '" + s.key_path("kind") + "': expected quadratic or softmax, got '" + kind + "'");
    s.get("dimension", t.dimension);
    if (s.has("correlation")) t.correlation = parse_correlation(s.raw("correlation"), s.key_path("correlation"), nullptr);
    s.get("classes", t.classes);
    s.get("feature_dim", t.feature_dim);
    s.get("train_per_class", t.train_per_class);
    s.get("test_per_class", t.test_per_class);
    s.get("spread", t.spread);
    s.get("batch_size", t.batch_size);
    if (s.has("alpha")) t.alpha = parse_alpha(s.raw("alpha"), s.key_path("alpha"));
    s.finish();
    return t;
}

ExperimentConfig parse_experiment(const json& obj) {
    Section s(obj, "experiment");
    ExperimentConfig c;
    s.get("nodes", c.nodes, true);
    s.get("fragments", c.fragments);
    if (s.has("scheme")) c.scheme = parse_enum(s, "scheme", parse_fragment_scheme);
    s.get("local_steps", c.local_steps);
    s.get("eta", c.eta, true);
    s.get("eta_relative", c.eta_relative);
    s.get("rounds", c.rounds, true);
    if (!s.has("topology")) throw ConfigError("missing required key 'experiment.topology'");
    c.topology = parse_enum(s, "topology", parse_topology_mode);
    s.get("degree", c.degree);
    s.get("static_topology", c.static_topology);
    if (!s.has("task")) throw ConfigError("missing required key 'experiment.task'");
    c.task = parse_task(s.raw("task"), "experiment.task");
    if (s.has("init")) {
        std::string init;
        s.get("init", init);
        if (init == "shared") c.init = InitMode::shared;
        else if (init == "independent") c.init = InitMode::independent;
        else throw ConfigError("key 'experiment.init': expected shared or independent, got '" + init + "'");
    }
    s.get("init_scale", c.init_scale);
    s.get("seed", c.seed);
    s.get("metrics_every", c.metrics_every);
    s.finish();
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("experiment: ") + e.what());
    }
    return c;
}

SpectralConfig parse_spectral(const json& obj) {
    Section s(obj, "spectral");
    SpectralConfig c;
    auto& st = c.setup;
    s.get("nodes", st.nodes);
    s.get("dimension", st.dimension);
    if (s.has("topology")) st.topology = parse_enum(s, "topology", parse_topology_mode);
    s.get("degree", st.degree);
    if (s.has("scheme")) st.scheme = parse_enum(s, "scheme", parse_fragment_scheme);
    s.get("tol", st.tol);
    if (s.has("eta")) {
        Section e(s.raw("eta"), "spectral.eta");
        std::string policy = "relative";
        e.get("policy", policy);
        if (policy == "relative") {
            st.use_fixed_eta = false;
            e.get("factor", st.eta_factor);
        } else if (policy == "fixed") {
            st.use_fixed_eta = true;
            e.get("value", st.eta_fixed, true);
        } else {
            throw ConfigError("key 'spectral.eta.policy': expected relative or fixed, got '" + policy + "'");
        }
        e.finish();
    }
    if (s.has("correlations")) {
        const json& list = s.raw("correlations");
        if (!list.is_array() || list.empty())
            throw ConfigError("key 'spectral.correlations': expected a non-empty list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            NamedCorrelation nc;
            nc.spec = parse_correlation(list[i], "spectral.correlations[" + std::to_string(i) + "]", &nc.name);
            for (const auto& prev : c.correlations)
                if (prev.name == nc.name) throw ConfigError("spectral.correlations: duplicate name '" + nc.name + "'");
            c.correlations.push_back(nc);
        }
    } else {
        c.correlations.push_back({"toeplitz", CorrelationSpec{}});
    }
    s.get_list("fragments", c.fragments);
    s.get_list("seeds", c.seeds);
    if (c.seeds.empty())
        for (std::uint64_t i = 0; i < 20; ++i) c.seeds.push_back(i);
    s.get("rounds", c.rounds);
    s.finish();

    if (st.nodes < 2) throw ConfigError("spectral.nodes: must be >= 2");
    if (st.topology == TopologyMode::el_local && (st.degree < 1 || st.degree > st.nodes - 1))
        throw ConfigError("spectral.degree: must lie in [1, nodes - 1] for el_local");
    if (st.topology == TopologyMode::regular && (st.degree >= st.nodes || (st.nodes * st.degree) % 2 != 0))
        throw ConfigError("spectral.degree: must be < nodes with nodes * degree even for regular");
    for (std::size_t k : c.fragments)
        if (k < 1 || st.dimension % k != 0)
            throw ConfigError("spectral.fragments: K = " + std::to_string(k) + " does not divide dimension " +
                              std::to_string(st.dimension));
    if (st.use_fixed_eta ? !(st.eta_fixed > 0.0) : !(st.eta_factor > 0.0))
        throw ConfigError("spectral.eta: step size must be > 0");
    return c;
}

SweepAxes parse_sweep(const json& obj) {
    Section s(obj, "sweep");
    SweepAxes axes;
    s.get_list("fragments", axes.fragments);
    s.get_list("degree", axes.degree);
    s.get_list("seeds", axes.seeds);
    if (s.has("alpha")) {
        const json& list = s.raw("alpha");
        if (!list.is_array() || list.empty()) throw ConfigError("key 'sweep.alpha': expected a non-empty list");
        for (std::size_t i = 0; i < list.size(); ++i)
            axes.alpha.push_back(parse_alpha(list[i], "sweep.alpha[" + std::to_string(i) + "]"));
    }
    s.finish();
    return axes;
}

json correlation_json(const CorrelationSpec& c) {
    json j{{"kind", c.name()}};
    if (c.kind == CorrelationSpec::Kind::toeplitz) {
        j["rho"] = c.rho;
    } else {
        j["blocks"] = c.blocks;
        j["within"] = c.within;
        j["across"] = c.across;
    }
    return j;
}

json alpha_json(const std::optional<double>& a) { return a ? json(*a) : json("iid"); }

}  // namespace

ConfigFile parse_config(const json& doc) {
    Section top(doc, "");
    int version = 0;
    top.get("schema_version", version, true);
    if (version != kSchemaVersion) {
        throw ConfigError("schema_version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }
    ConfigFile out;
    if (top.has("experiment")) out.experiment = parse_experiment(top.raw("experiment"));
    if (top.has("spectral")) out.spectral = parse_spectral(top.raw("spectral"));
    if (top.has("sweep")) out.sweep = parse_sweep(top.raw("sweep"));
    top.finish();
    return out;
}

ConfigFile load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
    return parse_config(doc);
}

void override_seed(ConfigFile& config, std::uint64_t seed) {
    auto shift = [seed](std::vector<std::uint64_t>& seeds) {
        if (seeds.empty()) return;
        const std::uint64_t base = seeds.front();
        for (auto& s : seeds) s = s - base + seed;
    };
    if (config.experiment) config.experiment->seed = seed;
    if (config.spectral) shift(config.spectral->seeds);
    if (config.sweep) shift(config.sweep->seeds);
}

json to_json(const ExperimentConfig& c) {
    const auto& t = c.task;
    json task{{"kind", t.kind == TaskConfig::Kind::quadratic ? "quadratic" : "softmax"}};
    if (t.kind == TaskConfig::Kind::quadratic) {
        task["dimension"] = t.dimension;
        task["correlation"] = correlation_json(t.correlation);
    } else {
        task["classes"] = t.classes;
        task["feature_dim"] = t.feature_dim;
        task["train_per_class"] = t.train_per_class;
        task["test_per_class"] = t.test_per_class;
        task["spread"] = t.spread;
        task["batch_size"] = t.batch_size;
        task["alpha"] = alpha_json(t.alpha);
    }
    return json{{"nodes", c.nodes},
                {"fragments", c.fragments},
                {"scheme", to_string(c.scheme)},
                {"local_steps", c.local_steps},
                {"eta", c.eta},
                {"eta_relative", c.eta_relative},
                {"rounds", c.rounds},
                {"topology", to_string(c.topology)},
                {"degree", c.degree},
                {"static_topology", c.static_topology},
                {"task", task},
                {"init", c.init == InitMode::shared ? "shared" : "independent"},
                {"init_scale", c.init_scale},
                {"seed", c.seed},
                {"metrics_every", c.metrics_every}};
}

json to_json(const SpectralConfig& c) {
    const auto& st = c.setup;
    json eta = st.use_fixed_eta ? json{{"policy", "fixed"}, {"value", st.eta_fixed}}
                                : json{{"policy", "relative"}, {"factor", st.eta_factor}};
    json corr = json::array();
    for (const auto& nc : c.correlations) {
        json j = correlation_json(nc.spec);
        j["name"] = nc.name;
        corr.push_back(j);
    }
    return json{{"nodes", st.nodes},       {"dimension", st.dimension}, {"topology", to_string(st.topology)},
                {"degree", st.degree},     {"scheme", to_string(st.scheme)}, {"tol", st.tol},
                {"eta", eta},              {"correlations", corr},     {"fragments", c.fragments},
                {"seeds", c.seeds},        {"rounds", c.rounds}};
}

json to_json(const SweepAxes& a) {
    json j = json::object();
    if (!a.fragments.empty()) j["fragments"] = a.fragments;
    if (!a.degree.empty()) j["degree"] = a.degree;
    if (!a.seeds.empty()) j["seeds"] = a.seeds;
    if (!a.alpha.empty()) {
        json list = json::array();
        for (const auto& v : a.alpha) list.push_back(alpha_json(v));
        j["alpha"] = list;
    }
    return j;
}

json to_json(const ConfigFile& c) {
    json j{{"schema_version", kSchemaVersion}};
    if (c.experiment) j["experiment"] = to_json(*c.experiment);
    if (c.spectral) j["spectral"] = to_json(*c.spectral);
    if (c.sweep) j["sweep"] = to_json(*c.sweep);
    return j;
}

}  // namespace mosaic
