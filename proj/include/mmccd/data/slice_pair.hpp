#pragma once

#include <stdexcept>
#include <string>

#include "mmccd/core/tensor.hpp"

namespace mmccd::data {

enum class Split { train, val, test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::val: return "val";
        case Split::test: return "test";
        default: return "train";
    }
}

inline Split split_from_name(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw std::invalid_argument("unknown split: " + s);
}

// A registered pair of modality images plus the anomaly ground truth.
struct SlicePair {
    Tensor x, y;  // (1,1,h,w)
    BoolImage anomaly_gt;
    std::string subject_id;
    int slice_index = 0;
    Split split = Split::train;
};

}  // namespace mmccd::data
