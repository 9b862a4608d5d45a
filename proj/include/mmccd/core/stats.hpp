#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mmccd {

// Linear-interpolation percentile over an ascending-sorted sample.
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile: empty sample");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p outside [0,100]");
    if (sorted.size() == 1) return sorted[0];
    double rank = (p / 100.0) * static_cast<double>(sorted.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(rank));
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace mmccd
