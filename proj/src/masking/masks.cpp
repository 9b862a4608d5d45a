#include "mmccd/masking/masks.hpp"

#include <stdexcept>

#include "mmccd/kernels/kernels.hpp"

namespace mmccd::masking {
namespace {

std::vector<int> strip_offsets(int dim, int extent, int stride) {
    std::vector<int> offs;
    for (int o = 0; o + extent <= dim; o += stride) offs.push_back(o);
    if (offs.back() != dim - extent) offs.push_back(dim - extent);
    return offs;
}

MaskStrip make_strip(Orientation orient, int offset, int extent, int h, int w) {
    MaskStrip strip;
    strip.orientation = orient;
    strip.offset = offset;
    strip.extent = extent;
    strip.as_image = Tensor::image(1, h, w);
    if (orient == Orientation::horizontal) {
        for (int y = offset; y < offset + extent; ++y)
            for (int x = 0; x < w; ++x) strip.as_image.at(0, 0, y, x) = 1.0f;
    } else {
        for (int y = 0; y < h; ++y)
            for (int x = offset; x < offset + extent; ++x) strip.as_image.at(0, 0, y, x) = 1.0f;
    }
    return strip;
}

}  // namespace

MaskSet build_mask_set(int height, int width, int extent, int stride, bool horizontal,
                       bool vertical) {
    if (height < 1 || width < 1) throw std::invalid_argument("mask_set: empty image");
    if (stride <= 0) throw std::invalid_argument("mask_set: stride must be positive");
    if (extent < 1) throw std::invalid_argument("mask_set: extent must be >= 1");
    if ((horizontal && extent > height) || (vertical && extent > width))
        throw std::invalid_argument("mask_set: extent exceeds image dimension");
    if (!horizontal && !vertical)
        throw std::invalid_argument("mask_set: at least one orientation required");

    MaskSet set;
    set.height = height;
    set.width = width;
    set.extent = extent;
    set.stride = stride;
    if (horizontal) {
        for (int o : strip_offsets(height, extent, stride))
            set.masks.push_back(make_strip(Orientation::horizontal, o, extent, height, width));
    }
    if (vertical) {
        for (int o : strip_offsets(width, extent, stride))
            set.masks.push_back(make_strip(Orientation::vertical, o, extent, height, width));
    }
    set.coverage.assign(static_cast<size_t>(height) * width, 0);
    for (const auto& m : set.masks)
        for (size_t i = 0; i < set.coverage.size(); ++i)
            set.coverage[i] += m.as_image.v[i] != 0.0f;
    return set;
}

Tensor apply_mask_noise(const Tensor& x, const Tensor& mask_img, const Tensor& eps) {
    if (!x.same_shape(mask_img) || !x.same_shape(eps))
        throw std::invalid_argument("apply_mask_noise: shape mismatch");
    Tensor out(x.n, x.c, x.h, x.w);
    kernels::ops().select(x.size(), mask_img.data(), eps.data(), x.data(), out.data());
    return out;
}

AggregateResult aggregate_anomaly(const std::vector<Tensor>& per_mask_errors,
                                  const MaskSet& set) {
    if (per_mask_errors.size() != set.masks.size())
        throw std::invalid_argument("aggregate_anomaly: error count != mask count");
    size_t npix = static_cast<size_t>(set.height) * set.width;
    for (const auto& e : per_mask_errors) {
        if (e.n != 1 || e.c != 1 || e.h != set.height || e.w != set.width)
            throw std::invalid_argument("aggregate_anomaly: error map shape mismatch");
    }

    std::vector<double> acc(npix, 0.0);
    for (size_t r = 0; r < per_mask_errors.size(); ++r) {
        const float* err = per_mask_errors[r].data();
        const float* m = set.masks[r].as_image.data();
        for (size_t i = 0; i < npix; ++i)
            if (m[i] != 0.0f) acc[i] += static_cast<double>(err[i]);
    }

    AggregateResult res;
    res.score = Tensor::image(1, set.height, set.width);
    for (size_t i = 0; i < npix; ++i) {
        if (set.coverage[i] == 0) {
            res.score.v[i] = 0.0f;
            ++res.uncovered_pixels;
        } else {
            res.score.v[i] = static_cast<float>(acc[i] / set.coverage[i]);
        }
    }
    return res;
}

}  // namespace mmccd::masking
