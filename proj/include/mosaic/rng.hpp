#pragma once

// Seed derivation. Every random draw in a run comes from a substream keyed by
// (master seed, purpose, round, index), so that changing K, the metrics
// cadence or the number of nodes never perturbs unrelated draws.

#include <cstdint>
#include <random>

namespace mosaic {

using Rng = std::mt19937_64;

enum class StreamPurpose : std::uint64_t {
    topology = 1,   // index = fragment
    local_sgd = 2,  // index = node
    init = 3,       // index = node
    partition = 4,
    dataset = 5,    // index 0 = train, 1 = test
    fragment_map = 6,
    spectral_init = 7,
    monte_carlo = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed for the substream identified by (master, purpose, round, index).
std::uint64_t derive_seed(std::uint64_t master, StreamPurpose purpose, std::uint64_t round,
                          std::uint64_t index);

Rng make_stream(std::uint64_t master, StreamPurpose purpose, std::uint64_t round = 0,
                std::uint64_t index = 0);

}  // namespace mosaic
