#include "mmccd/data/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmccd/core/stats.hpp"

namespace mmccd::data {

Modality modality_from_name(const std::string& name) {
    if (name == "t1") return Modality::t1;
    if (name == "t2") return Modality::t2;
    if (name == "flair") return Modality::flair;
    throw std::invalid_argument("unknown modality: " + name);
}

void percentile_window(Modality m, double* lo, double* hi) {
    *lo = 2.0;
    *hi = m == Modality::flair ? 90.0 : 98.0;
}

void normalize_volume(Volume& vol, Modality m) {
    std::vector<double> brain;
    brain.reserve(vol.size());
    for (float x : vol.v)
        if (x > 0.0f) brain.push_back(double(x));
    if (brain.size() < 100)
        throw std::invalid_argument("too few brain voxels: " + std::to_string(brain.size()));

    std::sort(brain.begin(), brain.end());
    double plo, phi;
    percentile_window(m, &plo, &phi);
    double lo = percentile_sorted(brain, plo);
    double hi = percentile_sorted(brain, phi);

    // Statistics over the brain voxels inside the window.
    double sum = 0.0, sum_sq = 0.0;
    size_t n = 0;
    for (double x : brain) {
        if (x < lo || x > hi) continue;
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("empty percentile window");
    double mean = sum / double(n);
    double var = std::max(0.0, sum_sq / double(n) - mean * mean);
    double sd = std::sqrt(var);
    if (sd == 0.0) throw std::invalid_argument("zero intensity spread in brain voxels");

    for (float& x : vol.v)
        if (x > 0.0f) x = float((double(x) - mean) / sd);
}

}  // namespace mmccd::data
