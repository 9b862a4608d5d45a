#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmccd/data/slice_pair.hpp"

namespace mmccd::data {

// Deterministic 80/10/10 subject partition (disjoint, order-stable for a
// given seed; ids may arrive in any order).
struct SplitAssignment {
    std::vector<std::string> train, val, test;
};
SplitAssignment split_subjects(std::vector<std::string> ids, uint64_t seed);

// FNV-1a over every pixel of every slice (x, y, gt in slice order).
uint64_t dataset_digest(const std::vector<SlicePair>& slices);

// On-disk layout under `dir`: per slice <subject>_<index>_{x,y,gt}.npy, plus
// manifest.jsonl (one slice per line: subject id, slice index, split, anomaly
// pixel count) and config.json (caller-provided provenance text + digest).
// Refuses to store a train slice with a nonempty ground truth.
void write_dataset(const std::string& dir, const std::vector<SlicePair>& slices,
                   const std::string& config_json);

std::vector<SlicePair> load_dataset(const std::string& dir, Split split);

// All splits, manifest order.
std::vector<SlicePair> load_dataset_all(const std::string& dir);

}  // namespace mmccd::data
