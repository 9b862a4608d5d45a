#pragma once

#include <vector>

#include "mmccd/core/tensor.hpp"

namespace mmccd::masking {

enum class Orientation { horizontal, vertical };

// Full-width (or full-height) strip of `extent` rows (columns) starting at
// `offset`, materialized as a 0/1 image.
struct MaskStrip {
    Orientation orientation = Orientation::horizontal;
    int offset = 0;
    int extent = 0;
    Tensor as_image;  // (1,1,h,w)
};

struct MaskSet {
    int height = 0, width = 0;
    int extent = 0, stride = 0;
    std::vector<MaskStrip> masks;  // horizontal strips by ascending offset, then vertical
    std::vector<int> coverage;     // per-pixel count of covering masks, row-major
};

// Strips at offsets 0, stride, 2*stride, ... while they fit; when the stride
// does not land flush on the far edge a final strip at dim - extent is added so
// every pixel is covered.
MaskSet build_mask_set(int height, int width, int extent, int stride, bool horizontal,
                       bool vertical);

// x_hat = (1 - m) * x + m * eps, as a per-pixel selection so unmasked pixels
// are bit-identical to x.
Tensor apply_mask_noise(const Tensor& x, const Tensor& mask_img, const Tensor& eps);

struct AggregateResult {
    Tensor score;
    int uncovered_pixels = 0;  // pixels no mask covered; their score is 0
};

// Per-pixel mean of each error map over the masks that cover the pixel:
// score[p] = sum_r m_r[p] * err_r[p] / sum_r m_r[p]. Accumulation runs in
// double in ascending mask order, so the result is independent of how the
// per-mask errors were produced (serial or parallel).
AggregateResult aggregate_anomaly(const std::vector<Tensor>& per_mask_errors,
                                  const MaskSet& set);

}  // namespace mmccd::masking
