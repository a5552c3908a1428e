#include "mosaic/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mosaic/engine.hpp"
#include "mosaic/rng.hpp"
#include "mosaic/state.hpp"

namespace mosaic {

namespace {

void check_matrices(std::span<const GossipMatrix> ws, const FragmentMap& map) {
    if (ws.size() != map.fragments()) {
        throw std::invalid_argument("spectral: " + std::to_string(ws.size()) + " gossip matrices for " +
                                    std::to_string(map.fragments()) + " fragments");
    }
    for (const auto& w : ws)
        if (w.weights.rows() != ws.front().weights.rows() || !w.weights.square())
            throw std::invalid_argument("spectral: gossip matrices must share one square shape");
}

}  // namespace

DenseMatrix block_gossip(std::span<const GossipMatrix> ws, const FragmentMap& map,
                         std::size_t max_entries) {
    check_matrices(ws, map);
    const std::size_t n = ws.front().weights.rows(), d = map.dimension();
    check_size(n * d, n * d, max_entries, "block_gossip");
    DenseMatrix out(n * d, n * d);
    for (std::size_t k = 0; k < ws.size(); ++k)
        out = add(out, kronecker(projector(map, k), ws[k].weights, max_entries));
    return out;
}

DenseMatrix disagreement_projector(std::size_t n, std::size_t d, std::size_t max_entries) {
    if (n < 1 || d < 1) throw std::invalid_argument("disagreement_projector: need n, d >= 1");
    DenseMatrix centering(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            centering(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / static_cast<double>(n);
    return kronecker(centering, DenseMatrix::identity(d), max_entries);
}

DenseMatrix build_M(std::span<const GossipMatrix> ws, const FragmentMap& map, const DenseMatrix& a,
                    double eta, std::size_t max_entries) {
    check_matrices(ws, map);
    const std::size_t n = ws.front().weights.rows(), d = map.dimension();
    if (a.rows() != d || a.cols() != d) throw std::invalid_argument("build_M: A must be d x d");
    check_size(n * d, n * d, max_entries, "build_M");

    const DenseMatrix step = add(DenseMatrix::identity(d), scaled(a, -2.0 * eta));
    // Right to left, so every left factor is sparse.
    DenseMatrix m = kronecker(DenseMatrix::identity(n), step, max_entries);
    m = matmul(commutation_matrix(d, n, max_entries), m, max_entries);
    m = matmul(block_gossip(ws, map, max_entries), m, max_entries);
    m = matmul(commutation_matrix(n, d, max_entries), m, max_entries);
    return matmul(disagreement_projector(n, d, max_entries), m, max_entries);
}

double contraction_factor(const DenseMatrix& m, double tol) {
    if (!m.square()) throw std::invalid_argument("contraction_factor: M must be square");
    EigenOptions options;
    options.tol = tol;
    options.positive_semidefinite = true;
    return largest_eigenvalue_symmetric(gram(m), options);
}

Vector apply_contraction(std::span<const double> e, std::span<const GossipMatrix> ws,
                         const FragmentMap& map, const DenseMatrix& a, double eta) {
    check_matrices(ws, map);
    const std::size_t n = ws.front().weights.rows(), d = map.dimension();
    if (e.size() != n * d) throw std::invalid_argument("apply_contraction: vector length is not n * d");
    StackedState stepped(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = e.subspan(i * d, d);
        const Vector ax = matvec(a, x);
        auto dst = stepped.node(i);
        for (std::size_t p = 0; p < d; ++p) dst[p] = x[p] - 2.0 * eta * ax[p];
    }
    StackedState mixed = exchange_and_aggregate(stepped, ws, map);
    const Vector avg = mixed.average();
    Vector out(std::move(mixed.stacked()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < d; ++p) out[i * d + p] -= avg[p];
    return out;
}

double spectral_eta(const SpectralSetup& setup, const DenseMatrix& a) {
    if (setup.use_fixed_eta) return setup.eta_fixed;
    return setup.eta_factor / largest_eigenvalue_symmetric(a, 1e-12);
}

std::vector<ContractionReport> sweep_K(const SpectralSetup& setup,
                                       std::span<const std::size_t> fragment_counts,
                                       std::span<const std::uint64_t> seeds) {
    const DenseMatrix a = make_correlation_matrix(setup.correlation, setup.dimension);
    const double eta = spectral_eta(setup, a);
    std::vector<std::size_t> ks(fragment_counts.begin(), fragment_counts.end());
    std::vector<std::uint64_t> ss(seeds.begin(), seeds.end());
    std::sort(ks.begin(), ks.end());
    std::sort(ss.begin(), ss.end());
    for (std::size_t k : ks) {
        if (k < 1 || setup.dimension % k != 0) {
            throw std::invalid_argument("sweep_K: K = " + std::to_string(k) + " does not divide d = " +
                                        std::to_string(setup.dimension));
        }
    }
    std::vector<ContractionReport> out;
    out.reserve(ks.size() * ss.size());
    for (std::size_t k : ks) {
        for (std::uint64_t seed : ss) {
            const FragmentMap map = make_fragment_map(setup.dimension, k, setup.scheme, seed);
            const auto ws = sample_fragment_matrices(setup.nodes, setup.degree, k, setup.topology, seed, 0);
            const DenseMatrix m = build_M(ws, map, a, eta);
            out.push_back(ContractionReport{k, seed, contraction_factor(m, setup.tol), eta,
                                            setup.correlation.name(), setup.topology, setup.degree});
        }
    }
    return out;
}

std::vector<double> consensus_recursion(std::span<const double> e0, const SpectralSetup& setup,
                                        std::size_t fragments, std::size_t rounds, std::uint64_t seed) {
    const std::size_t n = setup.nodes, d = setup.dimension;
    if (e0.size() != n * d) throw std::invalid_argument("consensus_recursion: e0 must have length n * d");
    {
        StackedState s(n, d, Vector(e0.begin(), e0.end()));
        const Vector avg = s.average();
        const double scale = std::max(1.0, norm2(e0));
        for (double v : avg) {
            if (std::abs(v) * std::sqrt(static_cast<double>(n)) > 1e-10 * scale) {
                throw std::invalid_argument(
                    "consensus_recursion: e0 is not in the disagreement subspace (P e0 != e0)");
            }
        }
    }
    const DenseMatrix a = make_correlation_matrix(setup.correlation, d);
    const double eta = spectral_eta(setup, a);
    const FragmentMap map = make_fragment_map(d, fragments, setup.scheme, seed);
    std::vector<double> trace;
    trace.reserve(rounds + 1);
    Vector e(e0.begin(), e0.end());
    trace.push_back(squared_norm(e));
    for (std::size_t t = 0; t < rounds; ++t) {
        const auto ws = sample_fragment_matrices(n, setup.degree, fragments, setup.topology, seed, t);
        e = apply_contraction(e, ws, map, a, eta);
        trace.push_back(squared_norm(e));
    }
    return trace;
}

Vector initial_disagreement(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng = make_stream(seed, StreamPurpose::spectral_init);
    std::normal_distribution<double> normal(0.0, 1.0);
    StackedState s(n, d);
    for (double& v : s.stacked()) v = normal(rng);
    const Vector avg = s.average();
    Vector e(std::move(s.stacked()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < d; ++p) e[i * d + p] -= avg[p];
    const double norm = norm2(e);
    if (norm > 0.0)
        for (double& v : e) v /= norm;
    return e;
}

}  // namespace mosaic
