#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mmccd/data/nifti.hpp"
#include "mmccd/data/slice_pair.hpp"

namespace mmccd::data {

// Co-registered modality pair plus the lesion label volume for one subject.
struct SubjectVolumes {
    std::string id;
    Volume x, y, seg;
};

// Axial slice selection. Training subjects contribute every lesion-free slice
// with index in [70, 90]; val/test subjects contribute the single slice in
// that window with the most lesion pixels (ties -> lowest index). A val/test
// subject whose window is entirely lesion-free yields nothing and a warning
// on `warn` (if given). Volumes need at least 91 axial slices. Slices are
// resampled to `target` (bilinear images, nearest labels).
std::vector<SlicePair> extract_slices(const SubjectVolumes& s, Split split, int target = 128,
                                      std::ostream* warn = nullptr);

// Lesion-pixel count (nonzero labels) of one axial slice.
int lesion_pixels(const Volume& seg, int z);

// Bilinear resampling of a (1,1,h,w) tensor to target x target. Half-pixel
// centers; exact on constants and the identity size.
Tensor resample_slice(const Tensor& img, int target);

// Nearest-neighbor resampling for label masks.
BoolImage resample_mask(const BoolImage& m, int target);

}  // namespace mmccd::data
