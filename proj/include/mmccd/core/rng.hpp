#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mmccd/core/tensor.hpp"

namespace mmccd {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Seeded generator. Normal draws use Box-Muller over explicit uniforms instead of
// std::normal_distribution, whose algorithm is implementation-defined; seeded runs
// stay reproducible across standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Independent stream derived from this generator's seed; order-insensitive, so
    // per-item streams stay stable no matter which worker touches them first.
    Rng fork(uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x51ED2701ull)));
    }

    uint64_t seed() const { return seed_; }

  private:
    uint64_t seed_;
    std::mt19937_64 gen_;
};

template <typename T>
void fill_normal(TensorT<T>& t, Rng& rng) {
    for (auto& x : t.v) x = static_cast<T>(rng.normal());
}

template <typename T>
TensorT<T> normal_like(const TensorT<T>& shape, Rng& rng) {
    TensorT<T> out(shape.n, shape.c, shape.h, shape.w);
    fill_normal(out, rng);
    return out;
}

}  // namespace mmccd
