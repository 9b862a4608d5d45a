#pragma once

#include <string>

#include "mmccd/data/nifti.hpp"

namespace mmccd::data {

enum class Modality { t1, t2, flair };

Modality modality_from_name(const std::string& name);

// Percentile window of the brain voxels used for normalization statistics:
// [2, 98] for t1/t2, [2, 90] for flair (drops the hyperintense lesion tail).
void percentile_window(Modality m, double* lo, double* hi);

// Z-scores the strictly positive (brain) voxels in place using mean/std of the
// brain voxels whose intensity lies inside the modality's percentile window
// (linear-interpolated percentiles). Background voxels (<= 0) are untouched.
// Throws std::invalid_argument on fewer than 100 brain voxels or zero spread.
void normalize_volume(Volume& vol, Modality m);

}  // namespace mmccd::data
