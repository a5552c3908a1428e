#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mosaic {

// The n node models stacked node-major: entry i * d + p is parameter p of
// node i.
class StackedState {
public:
    StackedState() = default;
    StackedState(std::size_t n, std::size_t d) : n_(n), d_(d), x_(n * d, 0.0) {}
    StackedState(std::size_t n, std::size_t d, std::vector<double> stacked)
        : n_(n), d_(d), x_(std::move(stacked)) {
        if (x_.size() != n * d) throw std::invalid_argument("StackedState: expected n * d entries");
    }
    // All nodes start from the same vector.
    static StackedState replicated(std::size_t n, std::span<const double> x) {
        StackedState s(n, x.size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < x.size(); ++p) s.x_[i * x.size() + p] = x[p];
        return s;
    }

    std::size_t nodes() const { return n_; }
    std::size_t dimension() const { return d_; }

    std::span<double> node(std::size_t i) { return {x_.data() + i * d_, d_}; }
    std::span<const double> node(std::size_t i) const { return {x_.data() + i * d_, d_}; }

    std::vector<double>& stacked() { return x_; }
    const std::vector<double>& stacked() const { return x_; }

    // Coordinate-wise mean over nodes.
    std::vector<double> average() const {
        std::vector<double> avg(d_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t p = 0; p < d_; ++p) avg[p] += x_[i * d_ + p];
        for (double& v : avg) v /= static_cast<double>(n_);
        return avg;
    }

    friend bool operator==(const StackedState&, const StackedState&) = default;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<double> x_;
};

}  // namespace mosaic
