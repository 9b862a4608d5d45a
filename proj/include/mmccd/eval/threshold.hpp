#pragma once

#include <vector>

#include "mmccd/core/tensor.hpp"

namespace mmccd::eval {

struct ThresholdChoice {
    double h = 0.0;
    double mean_dice = 0.0;
};

// Sweeps 200 evenly spaced candidates between the 1st and 99th percentile of
// the pooled validation scores and returns the threshold maximizing mean
// per-slice Dice; exact ties resolve to the smallest candidate.
ThresholdChoice select_threshold(const std::vector<Tensor>& scores,
                                 const std::vector<BoolImage>& gts);

}  // namespace mmccd::eval
