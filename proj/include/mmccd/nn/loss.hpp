#pragma once

#include <cmath>
#include <stdexcept>

#include "mmccd/core/tensor.hpp"
#include "mmccd/kernels/scalar_ref.hpp"

namespace mmccd::nn {

// Batch mean of the per-sample L2 norms ||pred_i - target_i||_2 (a norm, not a
// mean of squares). Fills dpred with the gradient; a zero-residual sample
// contributes zero gradient.
template <typename T>
double l2_norm_loss(const TensorT<T>& pred, const TensorT<T>& target, TensorT<T>* dpred) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("l2_norm_loss: shape mismatch " + pred.shape_str() + " vs " +
                                    target.shape_str());
    if (dpred && !dpred->same_shape(pred)) *dpred = TensorT<T>(pred.n, pred.c, pred.h, pred.w);
    size_t per = pred.size() / static_cast<size_t>(pred.n);
    double loss = 0.0;
    for (int s = 0; s < pred.n; ++s) {
        const T* p = pred.data() + static_cast<size_t>(s) * per;
        const T* g = target.data() + static_cast<size_t>(s) * per;
        double norm = std::sqrt(kernels::ref::sq_diff_sum(per, p, g));
        loss += norm;
        if (dpred) {
            T* d = dpred->data() + static_cast<size_t>(s) * per;
            double f = norm > 0.0 ? 1.0 / (norm * static_cast<double>(pred.n)) : 0.0;
            for (size_t i = 0; i < per; ++i)
                d[i] = static_cast<T>((static_cast<double>(p[i]) - static_cast<double>(g[i])) * f);
        }
    }
    return loss / static_cast<double>(pred.n);
}

}  // namespace mmccd::nn
