#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mmccd/config/config.hpp"
#include "mmccd/core/rng.hpp"
#include "mmccd/data/slice_pair.hpp"
#include "mmccd/diffusion/steps.hpp"
#include "mmccd/masking/masks.hpp"
#include "mmccd/nn/interfaces.hpp"

namespace mmccd::pipelines {

enum class SamplerKind { ddpm, ddim };

struct InferSettings {
    SamplerKind sampler = SamplerKind::ddim;
    int ddim_steps = 0;  // 0 -> T / 10
    diffusion::ReverseNoise reverse_noise = diffusion::ReverseNoise::posterior;
    bool abs_error = false;
};

InferSettings infer_settings(const config::ExperimentConfig& cfg);

struct InferenceResult {
    Tensor anomaly_score;                 // (1,1,S,S)
    std::vector<Tensor> per_mask_errors;  // populated when requested
    double threshold = std::numeric_limits<double>::infinity();
    BoolImage binary_mask;                // anomaly_score > threshold, exactly
    int uncovered_pixels = 0;
    bool collapsed_model = false;
};

// Per-pixel squared (or absolute) difference.
Tensor error_map(const Tensor& a, const Tensor& b, bool abs_error);

// (B,1,S,S) batch of every slice's modality-x image, slice order.
Tensor stack_modality_x(const std::vector<data::SlicePair>& slices);

// Stable per-slice stream id for rng forking, a function of identity only.
uint64_t slice_stream(const data::SlicePair& slice);

// Sets threshold and recomputes binary_mask = anomaly_score > h.
void apply_result_threshold(InferenceResult& r, double h);

// Masked cyclic translation: one shared terminal noise draw per slice, then
// for every mask a reverse chain conditioned on that mask's corrupted copy of
// x, backward translation of the (unmasked) result, and per-pixel error
// against x, aggregated over masks. All reverse chains for the slice run as
// one batch across masks.
InferenceResult infer_mmccd(nn::Denoiser& f, nn::Translator& g, const Tensor& x,
                            const masking::MaskSet& masks, const diffusion::NoiseSchedule& s,
                            const InferSettings& settings, Rng slice_rng,
                            bool keep_per_mask = false);

// Deterministic double translation x -> f -> g -> x. Flags a collapsed model
// when f is indistinguishable from the identity on this input.
InferenceResult infer_cyclic_unet(nn::Translator& f, nn::Translator& g, const Tensor& x,
                                  bool abs_error = false);

struct SliceScore {
    std::string subject_id;
    int slice_index = 0;
    data::Split split = data::Split::test;
    Tensor score;
    int uncovered_pixels = 0;
    bool collapsed_model = false;
};

// Loads the method's checkpoints from cfg.output_dir and scores every slice.
// Per-slice rng streams are derived from (seed, subject, slice), so results do
// not depend on slice order or worker count.
std::vector<SliceScore> run_inference(const config::ExperimentConfig& cfg,
                                      const std::vector<data::SlicePair>& slices);

uint64_t scores_digest(const std::vector<SliceScore>& scores);

}  // namespace mmccd::pipelines
