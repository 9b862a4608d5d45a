#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace mmccd::config {

struct ScheduleConfig {
    std::string kind = "linear";
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

struct MaskConfig {
    int extent = 16;
    int stride = 2;
    bool horizontal = true;
    bool vertical = true;
};

struct TrainSection {
    double learning_rate = 1e-4;
    int batch_size = 32;
    int max_steps = 2000;
    std::string optimizer = "adam";
    int checkpoint_every = 500;
};

struct SamplerConfig {
    std::string kind = "ddim";               // ddim | ddpm
    int ddim_steps = 0;                      // 0 -> T / 10
    std::string reverse_noise = "posterior"; // posterior | alg_literal (ddpm only)
};

struct PhantomSection {
    int image_size = 128;
    int n_train = 256;
    int n_val = 32;
    int n_test = 32;
    double noise_sigma = 0.02;
};

struct BaselineSection {
    int base_width = 16;
    int depth = 2;
    int latent_dim = 32;
    double kl_weight = 1e-3;
    std::vector<double> dae_sigmas = {0.1, 0.2, 0.5};
};

struct ModelSection {
    int base_width = 32;
    int depth = 3;
};

struct ExperimentConfig {
    std::string method = "mmccd";  // mmccd|cyclic_unet|ae|vae|dae|ddpm_uncond
    std::string modality_x = "t2";
    std::string modality_y = "t1";    // required iff method translates
    std::string data_source = "phantom";  // phantom | brats_dir
    std::string brats_dir;
    std::string error_map = "squared";    // squared | abs
    int image_size = 128;                 // resample target for volume data
    uint64_t seed = 1;
    int workers = 1;
    std::string output_dir = "runs/exp";
    ScheduleConfig schedule;
    MaskConfig mask;
    TrainSection train;
    SamplerConfig sampler;
    PhantomSection phantom;
    BaselineSection baseline;
    ModelSection model;
};

bool method_translates(const std::string& method);
bool method_uses_diffusion(const std::string& method);

// Strict parse: unknown keys and type mismatches raise ConfigError. Missing
// keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// Fully resolved echo (every field, defaults applied).
nlohmann::json config_to_json(const ExperimentConfig& c);

// Raises ConfigError on contradictions; checks paths exist for brats_dir.
void validate_config(const ExperimentConfig& c);

}  // namespace mmccd::config
