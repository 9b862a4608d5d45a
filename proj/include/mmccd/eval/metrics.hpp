#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmccd/core/tensor.hpp"

namespace mmccd::eval {

// Overlap counts between a predicted and a reference binary image.
struct OverlapCounts {
    size_t tp = 0, fp = 0, fn = 0, tn = 0;
    size_t pred() const { return tp + fp; }
    size_t gt() const { return tp + fn; }
};

OverlapCounts overlap(const BoolImage& pred, const BoolImage& gt);

// 2|P∩G| / (|P|+|G|); both sets empty -> 1.0 by convention.
double dice(const BoolImage& pred, const BoolImage& gt);

// |P∩G|/|P∪G|, |P∩G|/|P|, |P∩G|/|G|. Empty denominator -> nullopt; callers
// exclude those slices from averages and count the exclusions.
std::optional<double> jaccard(const BoolImage& pred, const BoolImage& gt);
std::optional<double> precision(const BoolImage& pred, const BoolImage& gt);
std::optional<double> recall(const BoolImage& pred, const BoolImage& gt);

// Mann-Whitney AUC over a pooled pixel population, ties by midrank:
// (wins + ties/2) / (n_pos * n_neg). Both counts are exact integers, so the
// result is bit-identical to a pairwise-comparison oracle and invariant under
// strictly monotone score transforms. One-class pool -> nullopt.
std::optional<double> auc_pooled(std::vector<std::pair<double, uint8_t>> pool);

// Exact squared Euclidean distance transform to the nearest set pixel
// (Felzenszwalb-Huttenlocher two-pass). No set pixel -> all entries huge.
std::vector<double> squared_edt(const BoolImage& features);

// Set pixels with at least one non-set 4-neighbor; out-of-image counts as
// non-set, so set pixels on the image border are boundary.
BoolImage boundary_image(const BoolImage& a);

// Average symmetric surface distance in pixel units: mean of the two directed
// average boundary-to-boundary distances. Either set empty -> nullopt.
std::optional<double> assd(const BoolImage& pred, const BoolImage& gt);

// pixel-wise score > threshold, exactly.
BoolImage apply_threshold(const Tensor& score, double threshold);

struct MetricsReport {
    int n_slices = 0;
    double threshold = 0.0;
    double dice = 0.0;  // mean per-slice; always defined (both-empty slices score 1)
    std::optional<double> auc;  // pooled over all pixels, not per-slice
    std::optional<double> jaccard, precision, recall, assd;  // means over defined slices
    int jaccard_excluded = 0, precision_excluded = 0, recall_excluded = 0, assd_excluded = 0;
    std::string config_echo;
};

// Thresholds every score map, computes per-slice metrics averaged with
// exclusion counting, and pools all pixels for AUC.
MetricsReport evaluate_slices(const std::vector<Tensor>& scores,
                              const std::vector<BoolImage>& gts, double threshold,
                              std::string config_echo = {});

// Aligned text table, one row per labelled report. Columns:
// DICE  AUC  Jac  Prec  Rec  ASSD  (undefined cells render as "n/a").
std::string format_report_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const std::string& text);

}  // namespace mmccd::eval
