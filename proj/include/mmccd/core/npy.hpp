#pragma once

#include <string>

#include "mmccd/core/tensor.hpp"

namespace mmccd {

// Minimal npy v1.0 io for 2D arrays: '<f4' intensity maps and '|u1' label masks,
// C order, little endian.
void save_npy(const std::string& path, const float* data, int h, int w);
void save_npy(const std::string& path, const BoolImage& img);

// Loads a 2D '<f4' array as a (1,1,h,w) tensor.
Tensor load_npy_f32(const std::string& path);
BoolImage load_npy_u8(const std::string& path);

}  // namespace mmccd
