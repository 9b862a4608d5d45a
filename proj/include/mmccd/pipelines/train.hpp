#pragma once

#include <string>
#include <vector>

#include "mmccd/config/config.hpp"
#include "mmccd/core/rng.hpp"
#include "mmccd/data/slice_pair.hpp"
#include "mmccd/diffusion/schedule.hpp"
#include "mmccd/nn/adam.hpp"
#include "mmccd/nn/autoencoder.hpp"
#include "mmccd/nn/unet.hpp"

namespace mmccd::pipelines {

// Side length the networks see for this experiment.
int input_size(const config::ExperimentConfig& cfg);

nn::UNetConfig denoiser_config(const config::ExperimentConfig& cfg);
nn::UNetConfig translator_config(const config::ExperimentConfig& cfg);
nn::UNetConfig uncond_config(const config::ExperimentConfig& cfg);
nn::AutoencoderConfig autoencoder_config(const config::ExperimentConfig& cfg, double dae_sigma);

// One training batch for the masked conditional denoiser. Per item, in draw
// order: step index t (uniform 1..T), strip orientation, strip offset, the
// condition's replacement noise, the target's diffusion noise.
struct MmccdBatch {
    Tensor y_t;    // noisy target (B,1,S,S)
    Tensor x_hat;  // masked condition
    Tensor y0;     // clean target
    std::vector<int> t;
};
MmccdBatch assemble_mmccd_batch(const std::vector<const data::SlicePair*>& batch,
                                const diffusion::NoiseSchedule& s,
                                const config::MaskConfig& mask_cfg, Rng& rng);

// Single optimizer steps; return the batch loss, throw DivergenceError when it
// goes non-finite.
double train_step_mmccd(nn::UNet& f, nn::Adam& opt,
                        const std::vector<const data::SlicePair*>& batch,
                        const diffusion::NoiseSchedule& s, const config::MaskConfig& mask_cfg,
                        Rng& rng);

// Supervised translation: x_to_y trains f (x -> y), otherwise g (y -> x).
double train_step_translation(nn::UNet& net, nn::Adam& opt,
                              const std::vector<const data::SlicePair*>& batch, bool x_to_y);

// Reconstruction baselines on modality x. noise_sigma > 0 corrupts the input
// (dae); kl_weight > 0 adds the variational penalty (vae). sigma == 0 draws no
// noise, so a dae at sigma 0 runs bit-identically to the plain ae.
double train_step_autoencoder(nn::Autoencoder& net, nn::Adam& opt,
                              const std::vector<const data::SlicePair*>& batch,
                              double noise_sigma, double kl_weight, Rng& rng);

double train_step_ddpm_uncond(nn::UNet& net, nn::Adam& opt,
                              const std::vector<const data::SlicePair*>& batch,
                              const diffusion::NoiseSchedule& s, Rng& rng);

struct TrainOutcome {
    long long steps_run = 0;                // optimizer steps executed now
    std::vector<std::string> checkpoints;   // final checkpoint files
};

// Trains every model the method needs into cfg.output_dir (<name>.ckpt plus
// loss_<name>.txt, one line per step). With resume, picks up from the stored
// step; finished models are left alone. The dae sigma sweep and the
// ddpm_uncond noise-level sweep use val_slices to pick their hyperparameter.
TrainOutcome run_training(const config::ExperimentConfig& cfg,
                          const std::vector<data::SlicePair>& train_slices,
                          const std::vector<data::SlicePair>& val_slices, bool resume);

}  // namespace mmccd::pipelines
