#include "mosaic/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace mosaic {

std::string to_string(TopologyMode mode) {
    switch (mode) {
        case TopologyMode::el_local: return "el_local";
        case TopologyMode::regular: return "regular";
        case TopologyMode::identity: return "identity";
        case TopologyMode::complete: return "complete";
    }
    return "unknown";
}

TopologyMode parse_topology_mode(const std::string& name) {
    if (name == "el_local") return TopologyMode::el_local;
    if (name == "regular") return TopologyMode::regular;
    if (name == "identity") return TopologyMode::identity;
    if (name == "complete") return TopologyMode::complete;
    throw std::invalid_argument("unknown topology mode '" + name +
                                "' (expected el_local, regular, identity or complete)");
}

GossipMatrix gossip_from_send_sets(std::vector<std::vector<std::size_t>> send_sets) {
    const std::size_t n = send_sets.size();
    std::vector<std::vector<std::size_t>> inbound(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i : send_sets[j]) {
            if (i >= n || i == j) throw std::invalid_argument("gossip_from_send_sets: invalid receiver");
            inbound[i].push_back(j);
        }
    }
    GossipMatrix g{n, DenseMatrix(n, n), std::move(send_sets)};
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 1.0 / static_cast<double>(inbound[i].size() + 1);
        g.weights(i, i) = w;
        for (std::size_t j : inbound[i]) g.weights(i, j) += w;
    }
    return g;
}

GossipMatrix sample_el_local(std::size_t n, std::size_t s, Rng& rng) {
    if (n < 2) throw std::invalid_argument("sample_el_local: need n >= 2");
    if (s < 1 || s > n - 1) {
        throw std::invalid_argument("sample_el_local: out-degree s = " + std::to_string(s) +
                                    " outside [1, " + std::to_string(n - 1) + "]");
    }
    std::vector<std::vector<std::size_t>> send_sets(n);
    std::vector<std::size_t> others(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        // Peers of j in increasing order, then a partial Fisher-Yates shuffle.
        for (std::size_t i = 0, pos = 0; i < n; ++i)
            if (i != j) others[pos++] = i;
        for (std::size_t m = 0; m < s; ++m) {
            std::uniform_int_distribution<std::size_t> pick(m, n - 2);
            std::swap(others[m], others[pick(rng)]);
        }
        send_sets[j].assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(s));
    }
    return gossip_from_send_sets(std::move(send_sets));
}

namespace {

bool try_pairing(std::size_t n, std::size_t r, Rng& rng,
                 std::vector<std::vector<std::size_t>>& adjacency) {
    adjacency.assign(n, {});
    std::vector<std::size_t> stubs;
    stubs.reserve(n * r);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t c = 0; c < r; ++c) stubs.push_back(v);

    auto connected = [&](std::size_t u, std::size_t v) {
        const auto& a = adjacency[u];
        return std::find(a.begin(), a.end(), v) != a.end();
    };
    auto remove_stub = [&](std::size_t idx) {
        stubs[idx] = stubs.back();
        stubs.pop_back();
    };

    while (!stubs.empty()) {
        std::size_t a = 0, b = 0;
        bool found = false;
        for (int attempt = 0; attempt < 64 && !found; ++attempt) {
            std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
            a = pick(rng);
            b = pick(rng);
            found = a != b && stubs[a] != stubs[b] && !connected(stubs[a], stubs[b]);
        }
        if (!found) {
            // Few stubs left: choose uniformly among the admissible pairs.
            std::vector<std::pair<std::size_t, std::size_t>> admissible;
            for (std::size_t x = 0; x < stubs.size(); ++x)
                for (std::size_t y = x + 1; y < stubs.size(); ++y)
                    if (stubs[x] != stubs[y] && !connected(stubs[x], stubs[y]))
                        admissible.emplace_back(x, y);
            if (admissible.empty()) return false;
            std::uniform_int_distribution<std::size_t> pick(0, admissible.size() - 1);
            std::tie(a, b) = admissible[pick(rng)];
        }
        const std::size_t u = stubs[a], v = stubs[b];
        adjacency[u].push_back(v);
        adjacency[v].push_back(u);
        remove_stub(std::max(a, b));
        remove_stub(std::min(a, b));
    }
    return true;
}

}  // namespace

GossipMatrix sample_regular_topology(std::size_t n, std::size_t r, Rng& rng) {
    if (n == 0) throw std::invalid_argument("sample_regular_topology: need n >= 1");
    if (r >= n) {
        throw std::invalid_argument("sample_regular_topology: degree r = " + std::to_string(r) +
                                    " must be < n = " + std::to_string(n));
    }
    if ((n * r) % 2 != 0) {
        throw std::invalid_argument("sample_regular_topology: n * r = " + std::to_string(n * r) +
                                    " is odd, no r-regular graph exists");
    }
    std::vector<std::vector<std::size_t>> adjacency;
    for (std::size_t attempt = 0; attempt < kRegularGraphRetryCap; ++attempt) {
        if (!try_pairing(n, r, rng, adjacency)) continue;
        for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
        GossipMatrix g{n, DenseMatrix(n, n), adjacency};
        const double w = 1.0 / static_cast<double>(r + 1);
        for (std::size_t i = 0; i < n; ++i) {
            g.weights(i, i) = w;
            for (std::size_t j : adjacency[i]) g.weights(i, j) = w;
        }
        return g;
    }
    throw std::runtime_error("sample_regular_topology: no simple " + std::to_string(r) +
                             "-regular graph on " + std::to_string(n) + " nodes after " +
                             std::to_string(kRegularGraphRetryCap) +
                             " attempts; try another seed");
}

GossipMatrix identity_gossip(std::size_t n) {
    return GossipMatrix{n, DenseMatrix::identity(n), std::vector<std::vector<std::size_t>>(n)};
}

GossipMatrix complete_gossip(std::size_t n) {
    std::vector<std::vector<std::size_t>> send_sets(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            if (i != j) send_sets[j].push_back(i);
    GossipMatrix g{n, DenseMatrix(n, n), std::move(send_sets)};
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g.weights(i, j) = w;
    return g;
}

std::vector<GossipMatrix> sample_fragment_matrices(std::size_t n, std::size_t degree,
                                                   std::size_t fragments, TopologyMode mode,
                                                   std::uint64_t seed, std::uint64_t round) {
    if (fragments == 0) throw std::invalid_argument("sample_fragment_matrices: K must be >= 1");
    std::vector<GossipMatrix> out;
    out.reserve(fragments);
    for (std::size_t k = 0; k < fragments; ++k) {
        Rng rng = make_stream(seed, StreamPurpose::topology, round, k);
        switch (mode) {
            case TopologyMode::el_local: out.push_back(sample_el_local(n, degree, rng)); break;
            case TopologyMode::regular: out.push_back(sample_regular_topology(n, degree, rng)); break;
            case TopologyMode::identity: out.push_back(identity_gossip(n)); break;
            case TopologyMode::complete: out.push_back(complete_gossip(n)); break;
        }
    }
    return out;
}

bool is_valid_gossip(const GossipMatrix& w, double tol) {
    if (w.weights.rows() != w.n || w.weights.cols() != w.n || w.send_sets.size() != w.n) return false;
    std::vector<std::vector<bool>> allowed(w.n, std::vector<bool>(w.n, false));
    for (std::size_t j = 0; j < w.n; ++j) {
        allowed[j][j] = true;
        for (std::size_t i : w.send_sets[j]) {
            if (i >= w.n) return false;
            allowed[i][j] = true;
        }
    }
    for (std::size_t i = 0; i < w.n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < w.n; ++j) {
            const double v = w.weights(i, j);
            if (!(v >= 0.0)) return false;
            if (v > 0.0 && !allowed[i][j]) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

}  // namespace mosaic
