#pragma once

// Per-round, per-fragment communication matrices.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mosaic/linalg.hpp"
#include "mosaic/rng.hpp"

namespace mosaic {

// Row-stochastic n x n gossip matrix together with the message pattern that
// produced it. send_sets[j] lists the receivers of sender j (excluding j).
struct GossipMatrix {
    std::size_t n = 0;
    DenseMatrix weights;
    std::vector<std::vector<std::size_t>> send_sets;
};

enum class TopologyMode {
    el_local,  // each node pushes to s uniformly random peers
    regular,   // random undirected r-regular graph
    identity,  // no communication
    complete,  // exact averaging, W = (1/n) 1 1^T
};

std::string to_string(TopologyMode mode);
TopologyMode parse_topology_mode(const std::string& name);

// Receiver i with m_i inbound senders averages its own model with the m_i
// received ones: W[i,i] = W[i,j] = 1/(m_i + 1).
GossipMatrix sample_el_local(std::size_t n, std::size_t s, Rng& rng);

inline constexpr std::size_t kRegularGraphRetryCap = 1000;

// Random simple r-regular graph from the pairing (configuration) model.
// Stubs are paired one edge at a time and a pair that would create a self-loop
// or a duplicate edge is redrawn; a dead end restarts the construction, up to
// kRegularGraphRetryCap restarts. Equal weights 1/(r+1) on neighbours and self.
GossipMatrix sample_regular_topology(std::size_t n, std::size_t r, Rng& rng);

GossipMatrix identity_gossip(std::size_t n);
GossipMatrix complete_gossip(std::size_t n);

// Builds the weights of a receiver-averaging gossip step from send sets.
GossipMatrix gossip_from_send_sets(std::vector<std::vector<std::size_t>> send_sets);

// K matrices for round `round`; fragment k draws from the substream
// (seed, topology, round, k), so fragment k's matrix does not depend on K.
// `degree` is s for el_local and r for regular and is ignored otherwise.
std::vector<GossipMatrix> sample_fragment_matrices(std::size_t n, std::size_t degree,
                                                   std::size_t fragments, TopologyMode mode,
                                                   std::uint64_t seed, std::uint64_t round);

// Checks the GossipMatrix invariants: square, nonnegative, rows sum to 1
// within tol, and support within send pattern plus diagonal.
bool is_valid_gossip(const GossipMatrix& w, double tol = 1e-12);

}  // namespace mosaic
