#include "mmccd/data/phantom.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "mmccd/core/digest.hpp"
#include "mmccd/core/rng.hpp"

namespace mmccd::data {
namespace {

constexpr int kAnomalyClass = -2;
constexpr int kBackground = -1;

uint64_t slice_stream(Split split, int index) {
    return (uint64_t(split) << 20) + uint64_t(index);
}

int matched_class(const PhantomSpec& spec, double ix) {
    int best = 0;
    double best_d = std::abs(ix - spec.classes[0].intensity_x);
    for (size_t k = 1; k < spec.classes.size(); ++k) {
        double d = std::abs(ix - spec.classes[k].intensity_x);
        if (d < best_d) {
            best_d = d;
            best = int(k);
        }
    }
    return best;
}

}  // namespace

const char* anomaly_mode_name(AnomalyMode m) {
    switch (m) {
        case AnomalyMode::distinct: return "distinct";
        case AnomalyMode::camouflage: return "camouflage";
        default: return "none";
    }
}

PhantomSpec default_phantom_spec() {
    PhantomSpec s;
    s.classes = {
        {"organ", 0.20, 0.30, 0.4},
        {"cortex", 0.45, 0.85, 0.4},
        {"nucleus", 0.90, 0.15, 0.4},
        {"glands", 0.70, 0.60, 0.4},
    };
    return s;
}

void validate_phantom_spec(const PhantomSpec& spec) {
    if (spec.classes.empty()) throw std::invalid_argument("phantom spec needs >= 1 tissue class");
    if (spec.image_size < 16) throw std::invalid_argument("phantom image_size too small");
    if (spec.noise_sigma < 0.0) throw std::invalid_argument("negative noise_sigma");
    for (size_t i = 0; i < spec.classes.size(); ++i)
        for (size_t j = i + 1; j < spec.classes.size(); ++j)
            if (std::abs(spec.classes[i].intensity_x - spec.classes[j].intensity_x) < 0.02)
                throw std::invalid_argument("class x intensities not injective: " +
                                            spec.classes[i].id + " vs " + spec.classes[j].id);

    // The degenerate single-class phantom never renders anomalies.
    if (spec.classes.size() == 1) return;

    int dk = matched_class(spec, spec.distinct_intensity_x);
    if (std::abs(spec.distinct_intensity_x - spec.classes[dk].intensity_x) < 0.05)
        throw std::invalid_argument("distinct anomaly intensity collides with class " +
                                    spec.classes[dk].id);

    const TissueClass& c = spec.classes[matched_class(spec, spec.camouflage_intensity_x)];
    if (std::abs(spec.camouflage_intensity_x - c.intensity_x) >= 0.01)
        throw std::invalid_argument("camouflage anomaly does not match any class in x");
    double mapped = c.intensity_y + c.slope * (spec.camouflage_intensity_x - c.intensity_x);
    if (std::abs(spec.camouflage_intensity_y - mapped) <= 0.5)
        throw std::invalid_argument("camouflage anomaly too close to class " + c.id +
                                    " mapping in y");
}

AnomalyMode phantom_anomaly_mode(Split split, int index) {
    if (split == Split::train) return AnomalyMode::none;
    return index % 2 == 0 ? AnomalyMode::distinct : AnomalyMode::camouflage;
}

SlicePair generate_phantom_slice(const PhantomSpec& spec, Split split, int index) {
    const int S = spec.image_size;
    Rng rng = Rng(spec.seed).fork(slice_stream(split, index));
    AnomalyMode mode = phantom_anomaly_mode(split, index);

    std::vector<int> cls(size_t(S) * S, kBackground);
    BoolImage gt(S, S);

    if (spec.classes.size() == 1) {
        // Degenerate single-class phantom: the class fills the image.
        for (int& c : cls) c = 0;
    } else {
        double cx = S * 0.5;
        double cy = S * 0.5;
        double a = S * spec.organ_axis;
        double b = a * spec.organ_aspect;

        // Inner ellipse bounding the cortex band: shifted and shrunk at
        // random, so band thickness varies around the ring.
        double ioff = a * rng.uniform(0.0, spec.inner_offset_hi);
        double iphi = rng.uniform(0.0, 2.0 * M_PI);
        double icx = cx + ioff * std::cos(iphi);
        double icy = cy + ioff * std::sin(iphi);
        double ia = a * rng.uniform(spec.inner_axis_lo, spec.inner_axis_hi);
        double ib = b * rng.uniform(spec.inner_axis_lo, spec.inner_axis_hi);
        double nucleus_r = spec.nucleus_outer;

        for (int py = 0; py < S; ++py)
            for (int px = 0; px < S; ++px) {
                double rx = (px - cx) / a, ry = (py - cy) / b;
                double rho = std::sqrt(rx * rx + ry * ry);
                if (rho > 1.0) continue;
                double ix = (px - icx) / ia, iy = (py - icy) / ib;
                int c = ix * ix + iy * iy > 1.0 ? 1 : 0;
                if (rho <= nucleus_r) c = 2;
                cls[size_t(py) * S + px] = c;
            }

        double gr = spec.gland_radius * a;
        for (int side = -1; side <= 1; side += 2) {
            double gx = cx + side * spec.gland_offset * a;
            for (int py = 0; py < S; ++py)
                for (int px = 0; px < S; ++px) {
                    double dx = px - gx, dy = py - cy;
                    if (dx * dx + dy * dy <= gr * gr) cls[size_t(py) * S + px] = 3;
                }
        }

        if (mode != AnomalyMode::none) {
            // Top or bottom sector, so the patch never lands on a gland.
            double sector = rng.uniform() < 0.5 ? 0.0 : M_PI;
            double theta = sector + 0.6 + rng.uniform(0.0, M_PI - 1.2);
            double aa = S * rng.uniform(spec.anomaly_axis_lo, spec.anomaly_axis_hi);
            double ab = S * rng.uniform(spec.anomaly_axis_lo, spec.anomaly_axis_hi);
            auto stamp = [&](double acx, double acy, bool organ_only) {
                int n = 0;
                for (int py = 0; py < S; ++py)
                    for (int px = 0; px < S; ++px) {
                        double dx = (px - acx) / aa, dy = (py - acy) / ab;
                        if (dx * dx + dy * dy > 1.0) continue;
                        if (organ_only && cls[size_t(py) * S + px] != 0) continue;
                        ++n;
                    }
                return n;
            };
            double acx, acy;
            bool organ_only;
            if (mode == AnomalyMode::camouflage) {
                // A cap growing inward from the cortex band: centered just
                // inside the inner ellipse, restricted to organ pixels so the
                // band merely looks locally thicker in x. Shrink toward the
                // organ interior until the cap has usable area.
                organ_only = true;
                double s = 0.95;
                acx = icx + s * ia * std::cos(theta);
                acy = icy + s * ib * std::sin(theta);
                for (int attempt = 0; attempt < 8 && stamp(acx, acy, true) < 6; ++attempt) {
                    s -= 0.05;
                    acx = icx + s * ia * std::cos(theta);
                    acy = icy + s * ib * std::sin(theta);
                }
            } else {
                // Floats in the organ interior. Reject positions touching the
                // nucleus, band, glands or background so the patch keeps its
                // full contrast against plain organ tissue; shrink when the
                // clear annulus is too tight for the drawn size.
                organ_only = false;
                auto survey = [&](double ocx, double ocy) {
                    int bad = 0, total = 0;
                    for (int py = 0; py < S; ++py)
                        for (int px = 0; px < S; ++px) {
                            double dx = (px - ocx) / aa, dy = (py - ocy) / ab;
                            if (dx * dx + dy * dy > 1.0) continue;
                            ++total;
                            if (cls[size_t(py) * S + px] != 0) ++bad;
                        }
                    return std::pair<int, int>(bad, total);
                };
                acx = cx;
                acy = cy;
                for (int round = 0;; ++round) {
                    bool placed = false;
                    for (int attempt = 0; attempt < 12 && !placed; ++attempt) {
                        double sec = rng.uniform() < 0.5 ? 0.0 : M_PI;
                        double th = sec + 0.6 + rng.uniform(0.0, M_PI - 1.2);
                        double rho_c =
                            rng.uniform(spec.anomaly_radius_lo, spec.anomaly_radius_hi);
                        acx = cx + a * rho_c * std::cos(th);
                        acy = cy + b * rho_c * std::sin(th);
                        auto [bad, total] = survey(acx, acy);
                        placed = bad == 0 && total >= 6;
                    }
                    if (placed || round >= 3) break;
                    aa *= 0.8;
                    ab *= 0.8;
                }
            }
            for (int py = 0; py < S; ++py)
                for (int px = 0; px < S; ++px) {
                    double dx = (px - acx) / aa, dy = (py - acy) / ab;
                    if (dx * dx + dy * dy > 1.0) continue;
                    if (organ_only && cls[size_t(py) * S + px] != 0) continue;
                    cls[size_t(py) * S + px] = kAnomalyClass;
                    gt.at(py, px) = 1;
                }
        }
    }

    double ax, ay, aslope = 0.4;
    if (mode == AnomalyMode::camouflage) {
        ax = spec.camouflage_intensity_x;
        ay = spec.camouflage_intensity_y;
    } else {
        ax = spec.distinct_intensity_x;
        ay = spec.distinct_intensity_y;
    }

    SlicePair p;
    p.x = Tensor(1, 1, S, S);
    p.y = Tensor(1, 1, S, S);
    for (int py = 0; py < S; ++py)
        for (int px = 0; px < S; ++px) {
            int c = cls[size_t(py) * S + px];
            if (c == kBackground) continue;
            double ix, iy, slope;
            if (c == kAnomalyClass) {
                ix = ax;
                iy = ay;
                slope = aslope;
            } else {
                ix = spec.classes[c].intensity_x;
                iy = spec.classes[c].intensity_y;
                slope = spec.classes[c].slope;
            }
            // Modality-consistent texture: y follows the class map applied to
            // the noisy x value, plus its own noise.
            double xv = ix + spec.noise_sigma * rng.normal();
            double yv = iy + slope * (xv - ix) + spec.noise_sigma * rng.normal();
            p.x.at(0, 0, py, px) = float(xv);
            p.y.at(0, 0, py, px) = float(yv);
        }

    p.anomaly_gt = std::move(gt);
    p.subject_id = std::string("phantom_") + split_name(split) + "_" + std::to_string(index);
    p.slice_index = index;
    p.split = split;
    return p;
}

std::vector<SlicePair> generate_phantom(const PhantomSpec& spec, int n_slices, Split split) {
    validate_phantom_spec(spec);
    if (n_slices < 0) throw std::invalid_argument("negative slice count");
    std::vector<SlicePair> out;
    out.reserve(size_t(n_slices));
    for (int i = 0; i < n_slices; ++i) out.push_back(generate_phantom_slice(spec, split, i));
    return out;
}

uint64_t phantom_spec_digest(const PhantomSpec& spec) {
    Digest d;
    auto upd_d = [&](double x) { d.update(&x, sizeof(x)); };
    auto upd_i = [&](int64_t x) { d.update(&x, sizeof(x)); };
    upd_i(int64_t(spec.classes.size()));
    for (const TissueClass& c : spec.classes) {
        d.update(c.id.data(), c.id.size());
        upd_d(c.intensity_x);
        upd_d(c.intensity_y);
        upd_d(c.slope);
    }
    upd_i(spec.image_size);
    upd_d(spec.noise_sigma);
    upd_d(spec.organ_axis);
    upd_d(spec.organ_aspect);
    upd_d(spec.inner_axis_lo);
    upd_d(spec.inner_axis_hi);
    upd_d(spec.inner_offset_hi);
    upd_d(spec.nucleus_outer);
    upd_d(spec.gland_offset);
    upd_d(spec.gland_radius);
    upd_d(spec.anomaly_radius_lo);
    upd_d(spec.anomaly_radius_hi);
    upd_d(spec.anomaly_axis_lo);
    upd_d(spec.anomaly_axis_hi);
    upd_d(spec.distinct_intensity_x);
    upd_d(spec.distinct_intensity_y);
    upd_d(spec.camouflage_intensity_x);
    upd_d(spec.camouflage_intensity_y);
    upd_i(int64_t(spec.seed));
    return d.value();
}

}  // namespace mmccd::data
