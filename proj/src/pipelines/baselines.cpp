#include "mmccd/pipelines/baselines.hpp"

#include "mmccd/core/errors.hpp"
#include "mmccd/diffusion/steps.hpp"
#include "mmccd/pipelines/infer.hpp"

namespace mmccd::pipelines {

Tensor reconstruct_autoencoder(nn::Autoencoder& net, const Tensor& x) {
    Tensor recon = net.forward(x, nullptr).recon;
    if (!all_finite(recon)) throw DivergenceError("autoencoder reconstruction non-finite");
    return recon;
}

Tensor reconstruct_ddpm_uncond(nn::UNet& net, const Tensor& x, int t_test,
                               const diffusion::NoiseSchedule& s, const Tensor& eps) {
    if (t_test < 1 || t_test > s.T)
        throw std::invalid_argument("t_test out of range [1, T]");
    Tensor y = diffusion::marginal_sample(x, t_test, eps, s);
    std::vector<int> ts(size_t(x.n));
    for (int t = t_test; t >= 1; --t) {
        std::fill(ts.begin(), ts.end(), t);
        Tensor y0_hat = net.forward(y, ts);
        if (!all_finite(y0_hat))
            throw DivergenceError("reconstruction non-finite at t=" + std::to_string(t));
        y = diffusion::ddpm_reverse_step(y0_hat, y, t, s);
    }
    return y;
}

Tensor uncond_noise_batch(uint64_t seed, const std::vector<data::SlicePair>& slices) {
    if (slices.empty()) throw std::invalid_argument("no slices");
    Tensor out(int(slices.size()), slices[0].x.c, slices[0].x.h, slices[0].x.w);
    size_t per = slices[0].x.size();
    for (size_t i = 0; i < slices.size(); ++i) {
        Rng rng = Rng(seed).fork(slice_stream(slices[i])).fork(0);
        for (size_t j = 0; j < per; ++j) out.v[i * per + j] = float(rng.normal());
    }
    return out;
}

}  // namespace mmccd::pipelines
