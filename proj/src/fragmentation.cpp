#include "mosaic/fragmentation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "mosaic/rng.hpp"

namespace mosaic {

std::string to_string(FragmentScheme scheme) {
    switch (scheme) {
        case FragmentScheme::contiguous: return "contiguous";
        case FragmentScheme::round_robin: return "round_robin";
        case FragmentScheme::shuffled: return "shuffled";
    }
    return "unknown";
}

FragmentScheme parse_fragment_scheme(const std::string& name) {
    if (name == "contiguous") return FragmentScheme::contiguous;
    if (name == "round_robin") return FragmentScheme::round_robin;
    if (name == "shuffled") return FragmentScheme::shuffled;
    throw std::invalid_argument("unknown fragment scheme '" + name +
                                "' (expected contiguous, round_robin or shuffled)");
}

FragmentMap::FragmentMap(std::vector<std::size_t> assignment, std::size_t fragments)
    : assignment_(std::move(assignment)), coordinates_(fragments) {
    if (fragments == 0) throw std::invalid_argument("FragmentMap: need at least one fragment");
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
        const std::size_t k = assignment_[i];
        if (k >= fragments) {
            throw std::invalid_argument("FragmentMap: coordinate " + std::to_string(i) +
                                        " assigned to fragment " + std::to_string(k) +
                                        " but K = " + std::to_string(fragments));
        }
        coordinates_[k].push_back(i);
    }
    for (std::size_t k = 0; k < fragments; ++k) {
        if (coordinates_[k].empty()) {
            throw std::invalid_argument("FragmentMap: fragment " + std::to_string(k) + " is empty");
        }
    }
}

const std::vector<std::size_t>& FragmentMap::coordinates(std::size_t k) const {
    if (k >= coordinates_.size()) {
        throw std::out_of_range("FragmentMap: fragment index " + std::to_string(k) +
                                " out of range for K = " + std::to_string(coordinates_.size()));
    }
    return coordinates_[k];
}

FragmentMap make_fragment_map(std::size_t d, std::size_t fragments, FragmentScheme scheme,
                              std::uint64_t seed) {
    if (fragments < 1 || fragments > d) {
        throw std::invalid_argument("make_fragment_map: need 1 <= K <= d (K = " +
                                    std::to_string(fragments) + ", d = " + std::to_string(d) + ")");
    }
    if (scheme != FragmentScheme::shuffled && d % fragments != 0) {
        throw std::invalid_argument("make_fragment_map: K = " + std::to_string(fragments) +
                                    " does not divide d = " + std::to_string(d) + " for scheme " +
                                    to_string(scheme));
    }
    std::vector<std::size_t> assign(d);
    switch (scheme) {
        case FragmentScheme::round_robin:
            for (std::size_t i = 0; i < d; ++i) assign[i] = i % fragments;
            break;
        case FragmentScheme::contiguous:
        case FragmentScheme::shuffled:
            for (std::size_t i = 0; i < d; ++i) assign[i] = i * fragments / d;
            break;
    }
    if (scheme == FragmentScheme::shuffled) {
        Rng rng = make_stream(seed, StreamPurpose::fragment_map);
        std::shuffle(assign.begin(), assign.end(), rng);
    }
    return FragmentMap(std::move(assign), fragments);
}

DenseMatrix projector(const FragmentMap& map, std::size_t k) {
    const auto& coords = map.coordinates(k);
    DenseMatrix p(map.dimension(), map.dimension());
    for (std::size_t i : coords) p(i, i) = 1.0;
    return p;
}

Vector fragment_slice(std::span<const double> x, const FragmentMap& map, std::size_t k) {
    if (x.size() != map.dimension()) {
        throw std::invalid_argument("fragment_slice: vector has length " + std::to_string(x.size()) +
                                    ", fragment map has d = " + std::to_string(map.dimension()));
    }
    Vector out(x.size(), 0.0);
    for (std::size_t i : map.coordinates(k)) out[i] = x[i];
    return out;
}

}  // namespace mosaic
