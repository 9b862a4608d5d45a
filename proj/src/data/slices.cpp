#include "mmccd/data/slices.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mmccd::data {
namespace {

constexpr int kWindowLo = 70;
constexpr int kWindowHi = 90;  // inclusive

Tensor slice_image(const Volume& vol, int z) {
    Tensor t(1, 1, vol.ny, vol.nx);
    for (int y = 0; y < vol.ny; ++y)
        for (int x = 0; x < vol.nx; ++x) t.at(0, 0, y, x) = vol.at(x, y, z);
    return t;
}

BoolImage slice_mask(const Volume& seg, int z) {
    BoolImage m(seg.ny, seg.nx);
    for (int y = 0; y < seg.ny; ++y)
        for (int x = 0; x < seg.nx; ++x) m.at(y, x) = seg.at(x, y, z) != 0.0f ? 1 : 0;
    return m;
}

}  // namespace

int lesion_pixels(const Volume& seg, int z) {
    int n = 0;
    for (int y = 0; y < seg.ny; ++y)
        for (int x = 0; x < seg.nx; ++x)
            if (seg.at(x, y, z) != 0.0f) ++n;
    return n;
}

Tensor resample_slice(const Tensor& img, int target) {
    if (img.n != 1 || img.c != 1) throw std::invalid_argument("resample_slice expects (1,1,h,w)");
    if (target <= 0) throw std::invalid_argument("resample target must be positive");
    int h = img.h, w = img.w;
    Tensor out(1, 1, target, target);
    double sy = double(h) / target, sx = double(w) / target;
    for (int dy = 0; dy < target; ++dy) {
        double fy = (dy + 0.5) * sy - 0.5;
        double y0 = std::floor(fy);
        double ty = fy - y0;
        int ya = std::clamp(int(y0), 0, h - 1);
        int yb = std::clamp(int(y0) + 1, 0, h - 1);
        for (int dx = 0; dx < target; ++dx) {
            double fx = (dx + 0.5) * sx - 0.5;
            double x0 = std::floor(fx);
            double tx = fx - x0;
            int xa = std::clamp(int(x0), 0, w - 1);
            int xb = std::clamp(int(x0) + 1, 0, w - 1);
            double top = img.at(0, 0, ya, xa) + tx * (double(img.at(0, 0, ya, xb)) - img.at(0, 0, ya, xa));
            double bot = img.at(0, 0, yb, xa) + tx * (double(img.at(0, 0, yb, xb)) - img.at(0, 0, yb, xa));
            out.at(0, 0, dy, dx) = float(top + ty * (bot - top));
        }
    }
    return out;
}

BoolImage resample_mask(const BoolImage& m, int target) {
    if (target <= 0) throw std::invalid_argument("resample target must be positive");
    BoolImage out(target, target);
    double sy = double(m.h) / target, sx = double(m.w) / target;
    for (int dy = 0; dy < target; ++dy) {
        int y = std::clamp(int(std::floor((dy + 0.5) * sy)), 0, m.h - 1);
        for (int dx = 0; dx < target; ++dx) {
            int x = std::clamp(int(std::floor((dx + 0.5) * sx)), 0, m.w - 1);
            out.at(dy, dx) = m.at(y, x);
        }
    }
    return out;
}

std::vector<SlicePair> extract_slices(const SubjectVolumes& s, Split split, int target,
                                      std::ostream* warn) {
    const Volume* vols[3] = {&s.x, &s.y, &s.seg};
    for (const Volume* v : vols)
        if (v->nx != s.x.nx || v->ny != s.x.ny || v->nz != s.x.nz)
            throw std::invalid_argument(s.id + ": modality/label shapes differ");
    if (s.x.nz <= kWindowHi)
        throw std::invalid_argument(s.id + ": needs at least " + std::to_string(kWindowHi + 1) +
                                    " axial slices, got " + std::to_string(s.x.nz));

    std::vector<int> picked;
    if (split == Split::train) {
        for (int z = kWindowLo; z <= kWindowHi; ++z)
            if (lesion_pixels(s.seg, z) == 0) picked.push_back(z);
    } else {
        int best = -1, best_n = 0;
        for (int z = kWindowLo; z <= kWindowHi; ++z) {
            int n = lesion_pixels(s.seg, z);
            if (n > best_n) {
                best_n = n;
                best = z;
            }
        }
        if (best < 0) {
            if (warn)
                *warn << s.id << ": no lesion in slice window [" << kWindowLo << ", " << kWindowHi
                      << "], subject skipped\n";
        } else {
            picked.push_back(best);
        }
    }

    std::vector<SlicePair> out;
    out.reserve(picked.size());
    for (int z : picked) {
        SlicePair p;
        p.x = resample_slice(slice_image(s.x, z), target);
        p.y = resample_slice(slice_image(s.y, z), target);
        p.anomaly_gt = split == Split::train ? BoolImage(target, target)
                                             : resample_mask(slice_mask(s.seg, z), target);
        p.subject_id = s.id;
        p.slice_index = z;
        p.split = split;
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace mmccd::data
