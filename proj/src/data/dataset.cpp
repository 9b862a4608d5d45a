#include "mmccd/data/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "mmccd/core/digest.hpp"
#include "mmccd/core/npy.hpp"
#include "mmccd/core/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mmccd::data {
namespace {

std::string slice_stem(const SlicePair& p) {
    return p.subject_id + "_" + std::to_string(p.slice_index);
}

SlicePair load_one(const fs::path& dir, const json& row) {
    SlicePair p;
    p.subject_id = row.at("subject_id").get<std::string>();
    p.slice_index = row.at("slice_index").get<int>();
    p.split = split_from_name(row.at("split").get<std::string>());
    std::string stem = slice_stem(p);
    p.x = load_npy_f32((dir / (stem + "_x.npy")).string());
    p.y = load_npy_f32((dir / (stem + "_y.npy")).string());
    p.anomaly_gt = load_npy_u8((dir / (stem + "_gt.npy")).string());
    int expect = row.at("anomaly_pixels").get<int>();
    if (int(p.anomaly_gt.count()) != expect)
        throw std::runtime_error(stem + ": ground truth does not match manifest pixel count");
    return p;
}

std::vector<SlicePair> load_filtered(const std::string& dir, const Split* want) {
    fs::path root(dir);
    std::ifstream mf(root / "manifest.jsonl");
    if (!mf) throw std::runtime_error("missing manifest in " + dir);
    std::vector<SlicePair> out;
    std::string line;
    while (std::getline(mf, line)) {
        if (line.empty()) continue;
        json row = json::parse(line);
        if (want && split_from_name(row.at("split").get<std::string>()) != *want) continue;
        out.push_back(load_one(root, row));
    }
    return out;
}

}  // namespace

SplitAssignment split_subjects(std::vector<std::string> ids, uint64_t seed) {
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw std::invalid_argument("duplicate subject id");

    // Stable pseudo-random order: hash of (seed, id), id as tie break.
    std::vector<std::pair<uint64_t, std::string>> keyed;
    keyed.reserve(ids.size());
    for (std::string& id : ids) {
        Digest d;
        d.update(&seed, sizeof(seed));
        d.update(id.data(), id.size());
        keyed.emplace_back(splitmix64(d.value()), std::move(id));
    }
    std::sort(keyed.begin(), keyed.end());

    size_t n = keyed.size();
    size_t n_train = n * 8 / 10, n_val = n / 10;
    SplitAssignment out;
    for (size_t i = 0; i < n; ++i) {
        std::string& id = keyed[i].second;
        if (i < n_train)
            out.train.push_back(std::move(id));
        else if (i < n_train + n_val)
            out.val.push_back(std::move(id));
        else
            out.test.push_back(std::move(id));
    }
    return out;
}

uint64_t dataset_digest(const std::vector<SlicePair>& slices) {
    Digest d;
    for (const SlicePair& p : slices) {
        d.update_vec(p.x.v);
        d.update_vec(p.y.v);
        d.update_vec(p.anomaly_gt.v);
    }
    return d.value();
}

void write_dataset(const std::string& dir, const std::vector<SlicePair>& slices,
                   const std::string& config_json) {
    for (const SlicePair& p : slices)
        if (p.split == Split::train && p.anomaly_gt.count() != 0)
            throw std::logic_error(slice_stem(p) + ": train slice carries anomaly pixels");

    fs::path root(dir);
    fs::create_directories(root);
    std::ofstream mf(root / "manifest.jsonl");
    if (!mf) throw std::runtime_error("cannot write manifest in " + dir);
    for (const SlicePair& p : slices) {
        std::string stem = slice_stem(p);
        save_npy((root / (stem + "_x.npy")).string(), p.x.data(), p.x.h, p.x.w);
        save_npy((root / (stem + "_y.npy")).string(), p.y.data(), p.y.h, p.y.w);
        save_npy((root / (stem + "_gt.npy")).string(), p.anomaly_gt);
        json row = {{"subject_id", p.subject_id},
                    {"slice_index", p.slice_index},
                    {"split", split_name(p.split)},
                    {"anomaly_pixels", int(p.anomaly_gt.count())}};
        mf << row.dump() << "\n";
    }
    mf.close();

    json cfg = json::parse(config_json);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", (unsigned long long)dataset_digest(slices));
    cfg["dataset_digest"] = hex;
    std::ofstream cf(root / "config.json");
    cf << cfg.dump(2) << "\n";
}

std::vector<SlicePair> load_dataset(const std::string& dir, Split split) {
    return load_filtered(dir, &split);
}

std::vector<SlicePair> load_dataset_all(const std::string& dir) { return load_filtered(dir, nullptr); }

}  // namespace mmccd::data
