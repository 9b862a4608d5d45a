#pragma once

#include <vector>

#include "mmccd/core/rng.hpp"
#include "mmccd/data/slice_pair.hpp"
#include "mmccd/diffusion/schedule.hpp"
#include "mmccd/nn/autoencoder.hpp"
#include "mmccd/nn/unet.hpp"

namespace mmccd::pipelines {

// Deterministic reconstruction (the vae decodes from its mean).
Tensor reconstruct_autoencoder(nn::Autoencoder& net, const Tensor& x);

// Partial noising to step t_test with the given per-sample noise, then the
// deterministic reverse chain back to step 0.
Tensor reconstruct_ddpm_uncond(nn::UNet& net, const Tensor& x, int t_test,
                               const diffusion::NoiseSchedule& s, const Tensor& eps);

// Per-slice noising draws from each slice's own stream: (B,1,S,S), slice order.
Tensor uncond_noise_batch(uint64_t seed, const std::vector<data::SlicePair>& slices);

}  // namespace mmccd::pipelines
