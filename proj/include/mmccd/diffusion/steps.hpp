#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "mmccd/core/tensor.hpp"
#include "mmccd/diffusion/schedule.hpp"
#include "mmccd/kernels/kernels.hpp"
#include "mmccd/kernels/scalar_ref.hpp"

namespace mmccd::diffusion {

namespace detail {

template <typename T>
void axpby(size_t n, double a, const T* x, double b, const T* y, T* out) {
    if constexpr (std::is_same_v<T, float>) {
        kernels::ops().axpby(n, static_cast<float>(a), x, static_cast<float>(b), y, out);
    } else {
        kernels::ref::axpby<T>(n, static_cast<T>(a), x, static_cast<T>(b), y, out);
    }
}

template <typename T>
void scale(size_t n, double a, const T* x, T* out) {
    if constexpr (std::is_same_v<T, float>) {
        kernels::ops().scale(n, static_cast<float>(a), x, out);
    } else {
        kernels::ref::scale<T>(n, static_cast<T>(a), x, out);
    }
}

inline void check_t(const NoiseSchedule& s, int t) {
    if (t < 1 || t > s.T) throw std::invalid_argument("diffusion: t out of range [1, T]");
}

}  // namespace detail

// y_t = sqrt(abar_t) * y0 + sqrt(1 - abar_t) * eps
template <typename T>
TensorT<T> marginal_sample(const TensorT<T>& y0, int t, const TensorT<T>& eps,
                           const NoiseSchedule& s) {
    detail::check_t(s, t);
    if (!y0.same_shape(eps))
        throw std::invalid_argument("marginal_sample: shape mismatch " + y0.shape_str() +
                                    " vs " + eps.shape_str());
    double abar = s.alpha_bar[t];
    TensorT<T> out(y0.n, y0.c, y0.h, y0.w);
    detail::axpby(y0.size(), std::sqrt(abar), y0.data(), std::sqrt(1.0 - abar), eps.data(),
                  out.data());
    return out;
}

// Single forward step q(y_t | y_{t-1}) = N(sqrt(alpha_t) y_{t-1}, beta_t I).
template <typename T>
TensorT<T> forward_step(const TensorT<T>& y_prev, int t, const TensorT<T>& eps,
                        const NoiseSchedule& s) {
    detail::check_t(s, t);
    if (!y_prev.same_shape(eps)) throw std::invalid_argument("forward_step: shape mismatch");
    TensorT<T> out(y_prev.n, y_prev.c, y_prev.h, y_prev.w);
    detail::axpby(y_prev.size(), std::sqrt(s.alpha[t]), y_prev.data(), std::sqrt(s.beta[t]),
                  eps.data(), out.data());
    return out;
}

template <typename T>
struct Posterior {
    TensorT<T> mu;
    double sigma2 = 0.0;
};

// Tractable posterior q(y_{t-1} | y_t, y_0):
//   mu = sqrt(abar_{t-1}) beta_t / (1 - abar_t) * y0
//      + sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t) * yt
//   sigma2 = (1 - abar_{t-1}) / (1 - abar_t) * beta_t
// At t = 1 the coefficients collapse (abar_0 = 1): mu = y0 exactly, sigma2 = 0.
template <typename T>
Posterior<T> posterior_params(const TensorT<T>& y0, const TensorT<T>& yt, int t,
                              const NoiseSchedule& s) {
    detail::check_t(s, t);
    if (!y0.same_shape(yt)) throw std::invalid_argument("posterior_params: shape mismatch");
    Posterior<T> out;
    if (t == 1) {
        out.mu = y0;
        out.sigma2 = 0.0;
        return out;
    }
    double abar_t = s.alpha_bar[t];
    double abar_prev = s.alpha_bar[t - 1];
    double denom = 1.0 - abar_t;
    if (denom == 0.0)
        throw std::invalid_argument("posterior_params: degenerate schedule, alpha_bar[t] == 1");
    double c0 = std::sqrt(abar_prev) * s.beta[t] / denom;
    double c1 = std::sqrt(s.alpha[t]) * (1.0 - abar_prev) / denom;
    out.mu = TensorT<T>(y0.n, y0.c, y0.h, y0.w);
    detail::axpby(y0.size(), c0, y0.data(), c1, yt.data(), out.mu.data());
    out.sigma2 = (1.0 - abar_prev) / denom * s.beta[t];
    return out;
}

enum class ReverseNoise {
    posterior,    // sqrt(sigma2) from the posterior above
    alg_literal,  // sqrt(1 - alpha_t)
};

// One ancestral reverse step from t to t-1 given the model's y0 estimate.
// eps == nullptr runs the step deterministically; noise is always skipped at t = 1.
template <typename T>
TensorT<T> ddpm_reverse_step(const TensorT<T>& y0_hat, const TensorT<T>& yt, int t,
                             const NoiseSchedule& s,
                             const TensorT<std::type_identity_t<T>>* eps = nullptr,
                             ReverseNoise mode = ReverseNoise::posterior) {
    Posterior<T> post = posterior_params(y0_hat, yt, t, s);
    if (t == 1 || eps == nullptr) return std::move(post.mu);
    if (!eps->same_shape(yt)) throw std::invalid_argument("ddpm_reverse_step: eps shape mismatch");
    double scale = mode == ReverseNoise::posterior ? std::sqrt(post.sigma2)
                                                   : std::sqrt(1.0 - s.alpha[t]);
    TensorT<T> out(yt.n, yt.c, yt.h, yt.w);
    detail::axpby(out.size(), 1.0, post.mu.data(), scale, eps->data(), out.data());
    return out;
}

// Deterministic (eta = 0) step from t to t_prev:
//   eps_hat = (yt - sqrt(abar_t) y0_hat) / sqrt(1 - abar_t)
//   out     = sqrt(abar_{t_prev}) y0_hat + sqrt(1 - abar_{t_prev}) eps_hat
// t_prev = 0 returns y0_hat exactly.
template <typename T>
TensorT<T> ddim_reverse_step(const TensorT<T>& y0_hat, const TensorT<T>& yt, int t,
                             int t_prev, const NoiseSchedule& s) {
    detail::check_t(s, t);
    if (t_prev < 0 || t_prev >= t)
        throw std::invalid_argument("ddim_reverse_step: need 0 <= t_prev < t");
    if (!y0_hat.same_shape(yt)) throw std::invalid_argument("ddim_reverse_step: shape mismatch");
    double abar_t = s.alpha_bar[t];
    if (1.0 - abar_t == 0.0)
        throw std::invalid_argument("ddim_reverse_step: degenerate schedule, alpha_bar[t] == 1");
    double c_t = std::sqrt(abar_t);
    double abar_p = s.alpha_bar[t_prev];

    size_t n = yt.size();
    TensorT<T> eps_hat(yt.n, yt.c, yt.h, yt.w);
    // Subtract first, then rescale: keeps eps_hat exactly zero when yt is
    // consistent with y0_hat (yt == sqrt(abar_t) * y0_hat elementwise).
    detail::axpby(n, 1.0, yt.data(), -c_t, y0_hat.data(), eps_hat.data());
    detail::scale(n, 1.0 / std::sqrt(1.0 - abar_t), eps_hat.data(), eps_hat.data());

    TensorT<T> out(yt.n, yt.c, yt.h, yt.w);
    detail::axpby(n, std::sqrt(abar_p), y0_hat.data(), std::sqrt(1.0 - abar_p),
                  eps_hat.data(), out.data());
    return out;
}

// Evenly spaced descending timesteps for a shortened deterministic chain:
// steps = K gives {K*T/K, ..., 2T/K, T/K}; the caller pairs each with its
// successor and finishes at 0.
inline std::vector<int> ddim_timesteps(int T, int steps) {
    if (steps < 1 || steps > T)
        throw std::invalid_argument("ddim_timesteps: need 1 <= steps <= T");
    std::vector<int> taus(static_cast<size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        long long tau = static_cast<long long>(T) * (steps - i) / steps;
        taus[static_cast<size_t>(i)] = static_cast<int>(tau);
    }
    if (taus.front() != T) taus.front() = T;
    for (size_t i = 1; i < taus.size(); ++i) {
        if (taus[i] >= taus[i - 1] || taus[i] < 1)
            throw std::logic_error("ddim_timesteps: non-descending subsequence");
    }
    return taus;
}

}  // namespace mmccd::diffusion
