#pragma once

// Fragment assignment of parameter coordinates and the associated diagonal
// projectors. Fragment indices are 0-based: fragment k of K owns the
// coordinates i with assignment()[i] == k.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mosaic/linalg.hpp"

namespace mosaic {

enum class FragmentScheme { contiguous, round_robin, shuffled };

std::string to_string(FragmentScheme scheme);
FragmentScheme parse_fragment_scheme(const std::string& name);

class FragmentMap {
public:
    // Every fragment in [0, fragments) must own at least one coordinate.
    FragmentMap(std::vector<std::size_t> assignment, std::size_t fragments);

    std::size_t dimension() const { return assignment_.size(); }
    std::size_t fragments() const { return coordinates_.size(); }
    std::size_t fragment_of(std::size_t coordinate) const { return assignment_[coordinate]; }
    const std::vector<std::size_t>& assignment() const { return assignment_; }
    // Sorted coordinate indices of fragment k.
    const std::vector<std::size_t>& coordinates(std::size_t k) const;

    friend bool operator==(const FragmentMap&, const FragmentMap&) = default;

private:
    std::vector<std::size_t> assignment_;
    std::vector<std::vector<std::size_t>> coordinates_;
};

// contiguous and round_robin require K | d. shuffled permutes the contiguous
// layout with the given seed; when K does not divide d it uses the balanced
// contiguous layout (fragment sizes differ by at most one).
FragmentMap make_fragment_map(std::size_t d, std::size_t fragments, FragmentScheme scheme,
                              std::uint64_t seed = 0);

// Diagonal 0/1 matrix selecting fragment k.
DenseMatrix projector(const FragmentMap& map, std::size_t k);

// Copy of x with every coordinate outside fragment k set to zero.
Vector fragment_slice(std::span<const double> x, const FragmentMap& map, std::size_t k);

}  // namespace mosaic
