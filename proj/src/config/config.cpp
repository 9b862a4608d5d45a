#include "mmccd/config/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "mmccd/core/errors.hpp"

using nlohmann::json;

namespace mmccd::config {
namespace {

const std::set<std::string> kMethods = {"mmccd", "cyclic_unet", "ae",
                                        "vae",   "dae",         "ddpm_uncond"};

// Rejects unknown keys so flag/file typos fail loudly instead of silently
// running with defaults.
class Section {
  public:
    Section(const json& j, const std::string& name) : j_(j), name_(name) {
        if (!j.is_object()) throw ConfigError(name + ": expected an object");
    }
    ~Section() = default;

    template <typename T>
    void get(const char* key, T* out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            *out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(name_ + "." + key + ": wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [key, val] : j_.items())
            if (!seen_.count(key)) throw ConfigError(name_ + ": unknown key '" + key + "'");
    }

  private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

void positive(double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
}

void non_negative(double v, const char* what) {
    if (!(v >= 0.0)) throw ConfigError(std::string(what) + " must be >= 0");
}

}  // namespace

bool method_translates(const std::string& method) {
    return method == "mmccd" || method == "cyclic_unet";
}

bool method_uses_diffusion(const std::string& method) {
    return method == "mmccd" || method == "ddpm_uncond";
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    Section top(j, "config");
    top.get("method", &c.method);
    top.get("modality_x", &c.modality_x);
    top.get("modality_y", &c.modality_y);
    top.get("data_source", &c.data_source);
    top.get("brats_dir", &c.brats_dir);
    top.get("error_map", &c.error_map);
    top.get("image_size", &c.image_size);
    top.get("seed", &c.seed);
    top.get("workers", &c.workers);
    top.get("output_dir", &c.output_dir);

    if (const json* js = top.child("schedule")) {
        Section s(*js, "schedule");
        s.get("kind", &c.schedule.kind);
        s.get("T", &c.schedule.T);
        s.get("beta_start", &c.schedule.beta_start);
        s.get("beta_end", &c.schedule.beta_end);
        s.finish();
    }
    if (const json* js = top.child("mask")) {
        Section s(*js, "mask");
        s.get("extent", &c.mask.extent);
        s.get("stride", &c.mask.stride);
        s.get("horizontal", &c.mask.horizontal);
        s.get("vertical", &c.mask.vertical);
        s.finish();
    }
    if (const json* js = top.child("train")) {
        Section s(*js, "train");
        s.get("learning_rate", &c.train.learning_rate);
        s.get("batch_size", &c.train.batch_size);
        s.get("max_steps", &c.train.max_steps);
        s.get("optimizer", &c.train.optimizer);
        s.get("checkpoint_every", &c.train.checkpoint_every);
        s.finish();
    }
    if (const json* js = top.child("sampler")) {
        Section s(*js, "sampler");
        s.get("kind", &c.sampler.kind);
        s.get("ddim_steps", &c.sampler.ddim_steps);
        s.get("reverse_noise", &c.sampler.reverse_noise);
        s.finish();
    }
    if (const json* js = top.child("phantom")) {
        Section s(*js, "phantom");
        s.get("image_size", &c.phantom.image_size);
        s.get("n_train", &c.phantom.n_train);
        s.get("n_val", &c.phantom.n_val);
        s.get("n_test", &c.phantom.n_test);
        s.get("noise_sigma", &c.phantom.noise_sigma);
        s.finish();
    }
    if (const json* js = top.child("baseline")) {
        Section s(*js, "baseline");
        s.get("base_width", &c.baseline.base_width);
        s.get("depth", &c.baseline.depth);
        s.get("latent_dim", &c.baseline.latent_dim);
        s.get("kl_weight", &c.baseline.kl_weight);
        s.get("dae_sigmas", &c.baseline.dae_sigmas);
        s.finish();
    }
    if (const json* js = top.child("model")) {
        Section s(*js, "model");
        s.get("base_width", &c.model.base_width);
        s.get("depth", &c.model.depth);
        s.finish();
    }
    top.finish();
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
    return json{
        {"method", c.method},
        {"modality_x", c.modality_x},
        {"modality_y", c.modality_y},
        {"data_source", c.data_source},
        {"brats_dir", c.brats_dir},
        {"error_map", c.error_map},
        {"image_size", c.image_size},
        {"seed", c.seed},
        {"workers", c.workers},
        {"output_dir", c.output_dir},
        {"schedule",
         {{"kind", c.schedule.kind},
          {"T", c.schedule.T},
          {"beta_start", c.schedule.beta_start},
          {"beta_end", c.schedule.beta_end}}},
        {"mask",
         {{"extent", c.mask.extent},
          {"stride", c.mask.stride},
          {"horizontal", c.mask.horizontal},
          {"vertical", c.mask.vertical}}},
        {"train",
         {{"learning_rate", c.train.learning_rate},
          {"batch_size", c.train.batch_size},
          {"max_steps", c.train.max_steps},
          {"optimizer", c.train.optimizer},
          {"checkpoint_every", c.train.checkpoint_every}}},
        {"sampler",
         {{"kind", c.sampler.kind},
          {"ddim_steps", c.sampler.ddim_steps},
          {"reverse_noise", c.sampler.reverse_noise}}},
        {"phantom",
         {{"image_size", c.phantom.image_size},
          {"n_train", c.phantom.n_train},
          {"n_val", c.phantom.n_val},
          {"n_test", c.phantom.n_test},
          {"noise_sigma", c.phantom.noise_sigma}}},
        {"baseline",
         {{"base_width", c.baseline.base_width},
          {"depth", c.baseline.depth},
          {"latent_dim", c.baseline.latent_dim},
          {"kl_weight", c.baseline.kl_weight},
          {"dae_sigmas", c.baseline.dae_sigmas}}},
        {"model", {{"base_width", c.model.base_width}, {"depth", c.model.depth}}},
    };
}

void validate_config(const ExperimentConfig& c) {
    if (!kMethods.count(c.method)) throw ConfigError("unknown method: " + c.method);
    if (c.modality_x.empty()) throw ConfigError("modality_x must be set");
    if (method_translates(c.method)) {
        if (c.modality_y.empty())
            throw ConfigError("method " + c.method + " requires modality_y");
        if (c.modality_x == c.modality_y)
            throw ConfigError("translation methods need modality_x != modality_y");
    }
    if (c.data_source == "brats_dir") {
        if (c.brats_dir.empty()) throw ConfigError("data_source brats_dir needs brats_dir");
        if (!std::filesystem::is_directory(c.brats_dir))
            throw ConfigError("brats_dir does not exist: " + c.brats_dir);
    } else if (c.data_source != "phantom") {
        throw ConfigError("unknown data_source: " + c.data_source);
    }
    if (c.error_map != "squared" && c.error_map != "abs")
        throw ConfigError("error_map must be 'squared' or 'abs'");
    if (c.image_size < 8) throw ConfigError("image_size too small");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (c.output_dir.empty()) throw ConfigError("output_dir must be set");

    if (c.schedule.kind != "linear") throw ConfigError("unknown schedule kind: " + c.schedule.kind);
    if (c.schedule.T < 1) throw ConfigError("schedule.T must be >= 1");
    positive(c.schedule.beta_start, "schedule.beta_start");
    if (!(c.schedule.beta_end >= c.schedule.beta_start) || !(c.schedule.beta_end < 1.0))
        throw ConfigError("need beta_start <= beta_end < 1");

    int s = c.data_source == "phantom" ? c.phantom.image_size : c.image_size;
    if (c.mask.extent < 1 || c.mask.extent > s) throw ConfigError("mask.extent out of range");
    if (c.mask.stride < 1) throw ConfigError("mask.stride must be >= 1");
    if (!c.mask.horizontal && !c.mask.vertical)
        throw ConfigError("mask config enables no orientation");

    positive(c.train.learning_rate, "train.learning_rate");
    if (c.train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (c.train.max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
    if (c.train.optimizer != "adam") throw ConfigError("unknown optimizer: " + c.train.optimizer);
    if (c.train.checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");

    if (c.sampler.kind != "ddim" && c.sampler.kind != "ddpm")
        throw ConfigError("sampler.kind must be 'ddim' or 'ddpm'");
    if (c.sampler.ddim_steps < 0 || c.sampler.ddim_steps > c.schedule.T)
        throw ConfigError("sampler.ddim_steps out of range");
    if (c.sampler.reverse_noise != "posterior" && c.sampler.reverse_noise != "alg_literal")
        throw ConfigError("sampler.reverse_noise must be 'posterior' or 'alg_literal'");

    if (c.phantom.image_size < 16) throw ConfigError("phantom.image_size too small");
    if (c.phantom.n_train < 1 || c.phantom.n_val < 0 || c.phantom.n_test < 0)
        throw ConfigError("phantom slice counts out of range");
    non_negative(c.phantom.noise_sigma, "phantom.noise_sigma");

    if (c.baseline.base_width < 1 || c.baseline.depth < 1 || c.baseline.latent_dim < 1)
        throw ConfigError("baseline model config out of range");
    non_negative(c.baseline.kl_weight, "baseline.kl_weight");
    if (c.baseline.dae_sigmas.empty()) throw ConfigError("baseline.dae_sigmas must not be empty");
    for (double sg : c.baseline.dae_sigmas) non_negative(sg, "baseline.dae_sigmas entry");

    if (c.model.base_width < 1 || c.model.depth < 1)
        throw ConfigError("model config out of range");
}

}  // namespace mmccd::config
