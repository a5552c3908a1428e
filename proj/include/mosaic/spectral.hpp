#pragma once

// Linear consensus analysis for identical quadratic objectives.
//
// With X the node-major stacked state, one round of gradient step plus
// fragment-wise gossip is X' = K_{n,d} Wb K_{d,n} (X - 2 eta (I_n (x) A)(X - X*)),
// where Wb = sum_k Pi_k (x) W_k is the parameter-major block gossip operator.
// The disagreement e = P X then evolves as e' = M e with
//   M = P K_{n,d} Wb K_{d,n} (I_n (x) (I_d - 2 eta A)),
//   P = (I_n - 11^T/n) (x) I_d,
// and rho(M^T M) bounds the per-round contraction of ||e||^2.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mosaic/fragmentation.hpp"
#include "mosaic/linalg.hpp"
#include "mosaic/tasks.hpp"
#include "mosaic/topology.hpp"

namespace mosaic {

// Sum_k kronecker(projector(map, k), ws[k]); nd x nd, parameter-major.
DenseMatrix block_gossip(std::span<const GossipMatrix> ws, const FragmentMap& map,
                         std::size_t max_entries = kDefaultMaxEntries);

// (I_n - 11^T/n) (x) I_d, node-major.
DenseMatrix disagreement_projector(std::size_t n, std::size_t d,
                                   std::size_t max_entries = kDefaultMaxEntries);

// The five-factor product above, evaluated with dense linalg kernels.
DenseMatrix build_M(std::span<const GossipMatrix> ws, const FragmentMap& map, const DenseMatrix& a,
                    double eta, std::size_t max_entries = kDefaultMaxEntries);

// lambda_max(M^T M).
double contraction_factor(const DenseMatrix& m, double tol = 1e-9);

// Applies M to a node-major vector without forming it: per-node gradient
// factor, fragment-wise gossip (engine exchange), then mean removal.
Vector apply_contraction(std::span<const double> e, std::span<const GossipMatrix> ws,
                         const FragmentMap& map, const DenseMatrix& a, double eta);

struct SpectralSetup {
    std::size_t nodes = 50;
    std::size_t dimension = 16;
    TopologyMode topology = TopologyMode::el_local;
    std::size_t degree = 2;
    FragmentScheme scheme = FragmentScheme::contiguous;
    CorrelationSpec correlation;
    // eta = eta_factor / lambda_max(A) unless eta_fixed is set.
    double eta_factor = 0.25;
    double eta_fixed = 0.0;
    bool use_fixed_eta = false;
    double tol = 1e-9;
};

// Resolved step size for a correlation matrix.
double spectral_eta(const SpectralSetup& setup, const DenseMatrix& a);

struct ContractionReport {
    std::size_t fragments = 0;
    std::uint64_t seed = 0;
    double rho = 0.0;
    double eta = 0.0;
    std::string correlation;
    TopologyMode topology = TopologyMode::el_local;
    std::size_t degree = 0;
};

// One rho per (K, seed), sorted by (K, seed). The matrices for a cell are the
// round-0 fragment matrices of that seed, so fragment k's matrix is shared by
// every K > k under the same seed.
std::vector<ContractionReport> sweep_K(const SpectralSetup& setup, std::span<const std::size_t> fragment_counts,
                                       std::span<const std::uint64_t> seeds);

// Iterates e_{t+1} = M_t e_t for `rounds` rounds with fresh matrices each
// round (drawn from `seed`). Returns ||e_t||^2 for t = 0..rounds. Requires
// P e0 = e0 within 1e-10 (relative to ||e0||).
std::vector<double> consensus_recursion(std::span<const double> e0, const SpectralSetup& setup,
                                        std::size_t fragments, std::size_t rounds, std::uint64_t seed);

// Standard normal nd-vector from `seed`, projected onto the disagreement
// subspace and scaled to unit norm. Independent of K.
Vector initial_disagreement(std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace mosaic
