#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "mmccd/diffusion/schedule.hpp"
#include "mmccd/nn/adam.hpp"
#include "mmccd/nn/autoencoder.hpp"
#include "mmccd/nn/checkpoint.hpp"
#include "mmccd/nn/unet.hpp"

namespace mmccd::pipelines {

inline nlohmann::json unet_config_json(const nn::UNetConfig& c) {
    return {{"base_width", c.base_width},   {"depth", c.depth},
            {"time_embedding", c.time_embedding}, {"in_channels", c.in_channels},
            {"out_channels", c.out_channels},     {"input_size", c.input_size}};
}

inline nn::UNetConfig unet_config_from_json(const nlohmann::json& j) {
    nn::UNetConfig c;
    c.base_width = j.at("base_width").get<int>();
    c.depth = j.at("depth").get<int>();
    c.time_embedding = j.at("time_embedding").get<bool>();
    c.in_channels = j.at("in_channels").get<int>();
    c.out_channels = j.at("out_channels").get<int>();
    c.input_size = j.at("input_size").get<int>();
    return c;
}

inline nlohmann::json ae_config_json(const nn::AutoencoderConfig& c) {
    return {{"variant", nn::ae_variant_name(c.variant)},
            {"base_width", c.base_width},
            {"depth", c.depth},
            {"latent_dim", c.latent_dim},
            {"input_size", c.input_size},
            {"in_channels", c.in_channels},
            {"out_channels", c.out_channels},
            {"kl_weight", c.kl_weight},
            {"dae_sigma", c.dae_sigma}};
}

inline nn::AutoencoderConfig ae_config_from_json(const nlohmann::json& j) {
    nn::AutoencoderConfig c;
    c.variant = nn::ae_variant_from_name(j.at("variant").get<std::string>());
    c.base_width = j.at("base_width").get<int>();
    c.depth = j.at("depth").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.input_size = j.at("input_size").get<int>();
    c.in_channels = j.at("in_channels").get<int>();
    c.out_channels = j.at("out_channels").get<int>();
    c.kl_weight = j.at("kl_weight").get<double>();
    c.dae_sigma = j.at("dae_sigma").get<double>();
    return c;
}

inline nlohmann::json schedule_json(const diffusion::NoiseSchedule& s) {
    return {{"kind", schedule_kind_name(s.kind)},
            {"T", s.T},
            {"beta_start", s.beta_start},
            {"beta_end", s.beta_end}};
}

inline diffusion::NoiseSchedule schedule_from_json(const nlohmann::json& j) {
    if (diffusion::schedule_kind_from_name(j.at("kind").get<std::string>()) !=
        diffusion::ScheduleKind::linear)
        throw std::runtime_error("unsupported schedule kind in checkpoint");
    return diffusion::make_linear_schedule(j.at("T").get<int>(),
                                           j.at("beta_start").get<double>(),
                                           j.at("beta_end").get<double>());
}

// Model parameters plus optimizer moments ("opt.m:<name>" / "opt.v:<name>"),
// so a resumed run continues exactly where the stored one stopped.
inline nn::Checkpoint make_checkpoint(const std::string& kind, nlohmann::json config,
                                      nlohmann::json schedule, long long step,
                                      const std::vector<nn::ParamRef<float>>& params,
                                      const nn::Adam* opt) {
    nn::Checkpoint ck;
    ck.kind = kind;
    ck.config = std::move(config);
    ck.schedule = std::move(schedule);
    ck.step = step;
    ck.tensors = nn::snapshot_params(params);
    if (opt && !opt->m.empty()) {
        if (opt->m.size() != params.size())
            throw std::logic_error("checkpoint: optimizer state does not match parameters");
        for (size_t i = 0; i < params.size(); ++i) {
            ck.tensors.emplace_back("opt.m:" + params[i].name, opt->m[i]);
            ck.tensors.emplace_back("opt.v:" + params[i].name, opt->v[i]);
        }
    }
    return ck;
}

inline void restore_from_checkpoint(const nn::Checkpoint& ck,
                                    const std::vector<nn::ParamRef<float>>& params,
                                    nn::Adam* opt) {
    nn::assign_params(params, ck.tensors);
    if (!opt) return;
    opt->m.clear();
    opt->v.clear();
    opt->t = 0;
    bool has_state = false;
    for (const auto& [name, tensor] : ck.tensors)
        if (name.rfind("opt.m:", 0) == 0) has_state = true;
    if (!has_state) return;
    std::vector<std::pair<std::string, Tensor>> only_opt;
    for (const auto& entry : ck.tensors)
        if (entry.first.rfind("opt.", 0) == 0) only_opt.push_back(entry);
    auto find = [&](const std::string& key) -> const Tensor& {
        for (const auto& [name, tensor] : only_opt)
            if (name == key) return tensor;
        throw std::runtime_error("checkpoint missing optimizer tensor " + key);
    };
    for (const auto& p : params) {
        opt->m.push_back(find("opt.m:" + p.name));
        opt->v.push_back(find("opt.v:" + p.name));
    }
    opt->t = ck.step;
}

}  // namespace mmccd::pipelines
