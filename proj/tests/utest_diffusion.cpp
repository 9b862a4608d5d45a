#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mmccd/core/rng.hpp"
#include "mmccd/diffusion/schedule.hpp"
#include "mmccd/diffusion/steps.hpp"

using namespace mmccd;
using namespace mmccd::diffusion;

namespace {

TensorD scalar_img(double v) {
    TensorD t = TensorD::image(1, 1, 1);
    t.v[0] = v;
    return t;
}

// Handcrafted schedule for degenerate-edge cases the builder rejects.
NoiseSchedule handmade(std::vector<double> alphas) {
    NoiseSchedule s;
    s.T = static_cast<int>(alphas.size());
    s.beta.assign(static_cast<size_t>(s.T) + 1, 0.0);
    s.alpha.assign(static_cast<size_t>(s.T) + 1, 1.0);
    s.alpha_bar.assign(static_cast<size_t>(s.T) + 1, 1.0);
    for (int t = 1; t <= s.T; ++t) {
        s.alpha[t] = alphas[static_cast<size_t>(t) - 1];
        s.beta[t] = 1.0 - s.alpha[t];
        s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    }
    return s;
}

}  // namespace

TEST_CASE("schedule: T=1 with equal bounds") {
    auto s = make_linear_schedule(1, 0.5, 0.5);
    CHECK(s.beta[1] == 0.5);
    CHECK(s.alpha[1] == 0.5);
    CHECK(s.alpha_bar[1] == 0.5);
    CHECK(s.alpha_bar[0] == 1.0);
}

TEST_CASE("schedule: T=2 default bounds, hand-computed products") {
    auto s = make_linear_schedule(2, 1e-4, 0.02);
    CHECK(s.beta[1] == doctest::Approx(1e-4).epsilon(1e-15));
    CHECK(s.beta[2] == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(s.alpha_bar[1] == doctest::Approx(0.9999).epsilon(1e-15));
    CHECK(s.alpha_bar[2] == doctest::Approx(0.9999 * 0.98).epsilon(1e-15));
}

TEST_CASE("schedule: T=1000 terminal noise level and long-double product oracle") {
    auto s = make_linear_schedule(1000, 1e-4, 0.02);
    CHECK(s.alpha_bar[1000] < 1e-4);
    CHECK(s.alpha_bar[1000] > 0.0);

    long double prod = 1.0L;
    for (int t = 1; t <= 1000; ++t) {
        long double beta = 1e-4L + (0.02L - 1e-4L) * static_cast<long double>(t - 1) / 999.0L;
        prod *= 1.0L - beta;
        double rel = std::abs(static_cast<double>(prod) - s.alpha_bar[t]) /
                     static_cast<double>(prod);
        CHECK(rel < 1e-12);
    }
}

TEST_CASE("schedule: invariants hold for assorted configs") {
    for (auto [T, b0, b1] : {std::tuple{1, 0.3, 0.3}, {10, 1e-3, 0.2}, {500, 1e-4, 0.02}}) {
        auto s = make_linear_schedule(T, b0, b1);
        for (int t = 1; t <= T; ++t) {
            CHECK(s.alpha[t] == 1.0 - s.beta[t]);
            CHECK(s.beta[t] > 0.0);
            CHECK(s.beta[t] < 1.0);
            CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
            CHECK(s.alpha_bar[t] > 0.0);
        }
    }
}

TEST_CASE("schedule: rejects bad arguments") {
    CHECK_THROWS_AS(make_linear_schedule(0, 1e-4, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(make_linear_schedule(10, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(make_linear_schedule(10, 1e-4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_linear_schedule(10, 0.02, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(make_linear_schedule(10, -0.1, 0.02), std::invalid_argument);
}

TEST_CASE("marginal_sample: zero eps scales by sqrt(abar)") {
    auto s = make_linear_schedule(10, 1e-3, 0.2);
    Tensor y0 = Tensor::image(1, 4, 4);
    Rng rng(5);
    fill_normal(y0, rng);
    Tensor eps = Tensor::image(1, 4, 4);
    auto yt = marginal_sample(y0, 7, eps, s);
    float c = static_cast<float>(std::sqrt(s.alpha_bar[7]));
    for (size_t i = 0; i < y0.size(); ++i) CHECK(yt.v[i] == c * y0.v[i]);
}

TEST_CASE("marginal_sample: abar == 1 returns y0 unchanged") {
    auto s = handmade({1.0, 0.9});  // alpha_bar[1] == 1
    Tensor y0 = Tensor::image(1, 3, 3);
    Rng rng(6);
    fill_normal(y0, rng);
    Tensor eps = normal_like(y0, rng);
    auto yt = marginal_sample(y0, 1, eps, s);
    for (size_t i = 0; i < y0.size(); ++i) CHECK(yt.v[i] == y0.v[i]);
}

TEST_CASE("marginal_sample: Monte Carlo variance matches 1 - abar") {
    auto s = handmade({0.9, 0.75 / 0.9});  // alpha_bar[2] == 0.75
    CHECK(s.alpha_bar[2] == doctest::Approx(0.75).epsilon(1e-12));
    Rng rng(7);
    TensorD y0 = scalar_img(0.0);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        TensorD eps = scalar_img(rng.normal());
        auto yt = marginal_sample(y0, 2, eps, s);
        sum += yt.v[0];
        sumsq += yt.v[0] * yt.v[0];
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 1e-2);
    CHECK(std::abs(var - 0.25) < 1e-2);
}

TEST_CASE("marginal_sample: rejects t out of range and shape mismatch") {
    auto s = make_linear_schedule(5, 1e-3, 0.2);
    Tensor y0 = Tensor::image(1, 2, 2), eps = Tensor::image(1, 2, 2);
    CHECK_THROWS_AS(marginal_sample(y0, 0, eps, s), std::invalid_argument);
    CHECK_THROWS_AS(marginal_sample(y0, 6, eps, s), std::invalid_argument);
    Tensor bad = Tensor::image(1, 2, 3);
    CHECK_THROWS_AS(marginal_sample(y0, 1, bad, s), std::invalid_argument);
}

TEST_CASE("posterior: t=1 collapses exactly") {
    auto s = make_linear_schedule(4, 1e-3, 0.2);
    TensorD y0 = scalar_img(1.7), y1 = scalar_img(-0.3);
    auto post = posterior_params(y0, y1, 1, s);
    CHECK(post.mu.v[0] == 1.7);
    CHECK(post.sigma2 == 0.0);
}

TEST_CASE("posterior: symbol-substitution oracle at t=2, alpha = [0.99, 0.98]") {
    auto s = handmade({0.99, 0.98});
    TensorD y0 = scalar_img(1.0), y2 = scalar_img(0.5);
    auto post = posterior_params(y0, y2, 2, s);

    double abar1 = 0.99, abar2 = 0.99 * 0.98, beta2 = 1.0 - 0.98;
    double c0 = std::sqrt(abar1) * beta2 / (1.0 - abar2);
    double c1 = std::sqrt(0.98) * (1.0 - abar1) / (1.0 - abar2);
    double mu = c0 * 1.0 + c1 * 0.5;
    double sigma2 = (1.0 - abar1) / (1.0 - abar2) * beta2;
    CHECK(post.mu.v[0] == doctest::Approx(mu).epsilon(1e-14));
    CHECK(post.sigma2 == doctest::Approx(sigma2).epsilon(1e-14));
    // frozen values for the record
    CHECK(post.mu.v[0] == doctest::Approx(0.83387571176).epsilon(1e-9));
    CHECK(post.sigma2 == doctest::Approx(0.00671140939597).epsilon(1e-9));
}

TEST_CASE("posterior: consistency identity mu(sqrt(abar_t) y0, y0) = sqrt(abar_{t-1}) y0") {
    auto s = make_linear_schedule(200, 1e-4, 0.05);
    TensorD y0 = scalar_img(1.3);
    for (int t : {2, 3, 50, 120, 200}) {
        TensorD yt = scalar_img(std::sqrt(s.alpha_bar[t]) * 1.3);
        auto post = posterior_params(y0, yt, t, s);
        CHECK(post.mu.v[0] ==
              doctest::Approx(std::sqrt(s.alpha_bar[t - 1]) * 1.3).epsilon(1e-12));
    }
}

TEST_CASE("posterior: sigma2 nonnegative and below beta_t") {
    auto s = make_linear_schedule(100, 1e-3, 0.2);
    TensorD y0 = scalar_img(0.2), yt = scalar_img(0.4);
    for (int t = 2; t <= 100; ++t) {
        auto post = posterior_params(y0, yt, t, s);
        CHECK(post.sigma2 >= 0.0);
        CHECK(post.sigma2 <= s.beta[t]);
    }
}

TEST_CASE("ddpm_reverse_step: alpha_t == 1 is a fixed point with zero variance") {
    auto s = handmade({0.9, 1.0});
    TensorD y0 = scalar_img(0.42), yt = scalar_img(-1.1);
    auto post = posterior_params(y0, yt, 2, s);
    CHECK(post.mu.v[0] == -1.1);
    CHECK(post.sigma2 == 0.0);
    auto out = ddpm_reverse_step(y0, yt, 2, s, nullptr);
    CHECK(out.v[0] == -1.1);
}

TEST_CASE("ddpm_reverse_step: oracle denoiser chain recovers y0 without noise") {
    auto s = make_linear_schedule(50, 1e-3, 0.2);
    Rng rng(8);
    Tensor y0 = Tensor::image(1, 4, 4);
    fill_normal(y0, rng);
    Tensor yt = normal_like(y0, rng);  // start anywhere
    for (int t = 50; t >= 1; --t) yt = ddpm_reverse_step(y0, yt, t, s, nullptr);
    for (size_t i = 0; i < y0.size(); ++i)
        CHECK(std::abs(yt.v[i] - y0.v[i]) < 1e-5);
}

TEST_CASE("ddpm_reverse_step: literal noise scale flag uses sqrt(beta_t)") {
    auto s = make_linear_schedule(10, 1e-2, 0.1);
    TensorD y0 = scalar_img(0.3), yt = scalar_img(0.9), eps = scalar_img(1.0);
    int t = 5;
    auto post = posterior_params(y0, yt, t, s);
    auto lit = ddpm_reverse_step(y0, yt, t, s, &eps, ReverseNoise::alg_literal);
    CHECK(lit.v[0] == doctest::Approx(post.mu.v[0] + std::sqrt(s.beta[t])).epsilon(1e-14));
    auto pos = ddpm_reverse_step(y0, yt, t, s, &eps, ReverseNoise::posterior);
    CHECK(pos.v[0] == doctest::Approx(post.mu.v[0] + std::sqrt(post.sigma2)).epsilon(1e-14));
    CHECK(lit.v[0] != pos.v[0]);  // the two conventions differ away from the endpoints
}

TEST_CASE("ddpm_reverse_step: noise skipped at t = 1 even when eps given") {
    auto s = make_linear_schedule(10, 1e-2, 0.1);
    TensorD y0 = scalar_img(0.3), y1 = scalar_img(0.9), eps = scalar_img(5.0);
    auto out = ddpm_reverse_step(y0, y1, 1, s, &eps);
    CHECK(out.v[0] == 0.3);
}

TEST_CASE("ddim_reverse_step: t_prev = 0 returns y0_hat exactly") {
    auto s = make_linear_schedule(10, 1e-2, 0.1);
    Rng rng(9);
    Tensor y0 = Tensor::image(1, 3, 3);
    fill_normal(y0, rng);
    Tensor yt = normal_like(y0, rng);
    auto out = ddim_reverse_step(y0, yt, 3, 0, s);
    for (size_t i = 0; i < y0.size(); ++i) CHECK(out.v[i] == y0.v[i]);
}

TEST_CASE("ddim_reverse_step: consistent yt gives zero residual") {
    auto s = make_linear_schedule(100, 1e-3, 0.2);
    Rng rng(10);
    Tensor y0 = Tensor::image(1, 4, 4);
    fill_normal(y0, rng);
    Tensor zeros = Tensor::image(1, 4, 4);
    int t = 60, t_prev = 30;
    Tensor yt = marginal_sample(y0, t, zeros, s);  // exactly sqrt(abar_t) * y0
    auto out = ddim_reverse_step(y0, yt, t, t_prev, s);
    float cp = static_cast<float>(std::sqrt(s.alpha_bar[t_prev]));
    for (size_t i = 0; i < y0.size(); ++i) CHECK(out.v[i] == cp * y0.v[i]);
}

TEST_CASE("ddim_reverse_step: oracle chain walks the marginal trajectory") {
    auto s = make_linear_schedule(100, 1e-3, 0.2);
    Rng rng(11);
    Tensor y0 = Tensor::image(1, 8, 8);
    fill_normal(y0, rng);
    Tensor eps = normal_like(y0, rng);
    auto taus = ddim_timesteps(100, 10);
    Tensor yt = marginal_sample(y0, taus[0], eps, s);
    for (size_t i = 0; i < taus.size(); ++i) {
        int t = taus[i];
        int t_prev = i + 1 < taus.size() ? taus[i + 1] : 0;
        yt = ddim_reverse_step(y0, yt, t, t_prev, s);
    }
    for (size_t i = 0; i < y0.size(); ++i)
        CHECK(std::abs(yt.v[i] - y0.v[i]) < 1e-5);
}

TEST_CASE("ddim_timesteps: even spacing, endpoints, validation") {
    auto taus = ddim_timesteps(100, 10);
    REQUIRE(taus.size() == 10);
    CHECK(taus.front() == 100);
    CHECK(taus.back() == 10);
    for (size_t i = 1; i < taus.size(); ++i) CHECK(taus[i - 1] - taus[i] == 10);

    auto taus2 = ddim_timesteps(7, 3);
    CHECK(taus2.front() == 7);
    CHECK(taus2.back() >= 1);
    CHECK_THROWS_AS(ddim_timesteps(10, 0), std::invalid_argument);
    CHECK_THROWS_AS(ddim_timesteps(10, 11), std::invalid_argument);
}

TEST_CASE("composition: T sequential forward steps match the marginal in distribution") {
    auto s = make_linear_schedule(10, 1e-2, 0.15);
    Rng rng(12);
    const int trials = 20000;
    const double y0v = 0.8;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < trials; ++i) {
        TensorD y = scalar_img(y0v);
        for (int t = 1; t <= 10; ++t) {
            TensorD eps = scalar_img(rng.normal());
            y = forward_step(y, t, eps, s);
        }
        sum += y.v[0];
        sumsq += y.v[0] * y.v[0];
    }
    double mean = sum / trials;
    double var = sumsq / trials - mean * mean;
    double want_mean = std::sqrt(s.alpha_bar[10]) * y0v;
    double want_var = 1.0 - s.alpha_bar[10];
    double se_mean = std::sqrt(want_var / trials);
    double se_var = want_var * std::sqrt(2.0 / (trials - 1));
    CHECK(std::abs(mean - want_mean) < 3.0 * se_mean);
    CHECK(std::abs(var - want_var) < 3.0 * se_var);
}

TEST_CASE("steps are pure: repeated calls produce identical outputs") {
    auto s = make_linear_schedule(20, 1e-3, 0.1);
    Rng rng(13);
    Tensor y0 = Tensor::image(1, 5, 5);
    fill_normal(y0, rng);
    Tensor eps = normal_like(y0, rng);
    auto a = marginal_sample(y0, 9, eps, s);
    auto b = marginal_sample(y0, 9, eps, s);
    CHECK(a.v == b.v);
    auto p1 = posterior_params(y0, a, 9, s);
    auto p2 = posterior_params(y0, a, 9, s);
    CHECK(p1.mu.v == p2.mu.v);
    CHECK(p1.sigma2 == p2.sigma2);
}
