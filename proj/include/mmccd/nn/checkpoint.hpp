#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmccd/core/tensor.hpp"
#include "mmccd/nn/layers.hpp"

namespace mmccd::nn {

// Self-describing checkpoint container: magic + version, a JSON header with
// the model kind/config/schedule/step and a tensor manifest, then raw f32
// little-endian payloads in manifest order.
struct Checkpoint {
    std::string kind;            // "unet" | "autoencoder"
    nlohmann::json config;       // model config record
    nlohmann::json schedule;     // noise schedule descriptor, null when absent
    long long step = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// name -> tensor copy helpers for restoring a constructed model.
std::vector<std::pair<std::string, Tensor>> snapshot_params(
    const std::vector<ParamRef<float>>& params);
void assign_params(const std::vector<ParamRef<float>>& params,
                   const std::vector<std::pair<std::string, Tensor>>& tensors);

}  // namespace mmccd::nn
