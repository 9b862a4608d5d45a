#include "mmccd/eval/threshold.hpp"

#include <algorithm>
#include <stdexcept>

#include "mmccd/core/stats.hpp"
#include "mmccd/eval/metrics.hpp"

namespace mmccd::eval {

ThresholdChoice select_threshold(const std::vector<Tensor>& scores,
                                 const std::vector<BoolImage>& gts) {
    if (scores.size() != gts.size())
        throw std::invalid_argument("select_threshold: score/gt count mismatch");
    if (scores.empty()) throw std::invalid_argument("select_threshold: no slices");
    std::vector<double> pooled;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].h != gts[i].h || scores[i].w != gts[i].w)
            throw std::invalid_argument("select_threshold: score/gt shape mismatch");
        for (float v : scores[i].v) pooled.push_back(static_cast<double>(v));
    }
    std::sort(pooled.begin(), pooled.end());
    double lo = percentile_sorted(pooled, 1.0);
    double hi = percentile_sorted(pooled, 99.0);

    auto mean_dice_at = [&](double h) {
        double sum = 0.0;
        for (size_t i = 0; i < scores.size(); ++i)
            sum += dice(apply_threshold(scores[i], h), gts[i]);
        return sum / static_cast<double>(scores.size());
    };

    ThresholdChoice best{lo, mean_dice_at(lo)};
    if (hi > lo) {
        for (int i = 1; i < 200; ++i) {
            double h = lo + (hi - lo) * static_cast<double>(i) / 199.0;
            double d = mean_dice_at(h);
            if (d > best.mean_dice) best = {h, d};
        }
    }
    return best;
}

}  // namespace mmccd::eval
