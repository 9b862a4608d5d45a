#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmccd/data/slice_pair.hpp"

namespace mmccd::data {

// One tissue class: its modality-x anchor intensity and the local linear map
// to modality y, y = intensity_y + slope * (x - intensity_x).
struct TissueClass {
    std::string id;
    double intensity_x = 0.0;
    double intensity_y = 0.0;
    double slope = 0.4;
};

enum class AnomalyMode { none, distinct, camouflage };

const char* anomaly_mode_name(AnomalyMode m);

struct PhantomSpec {
    std::vector<TissueClass> classes;  // see default_phantom_spec()
    int image_size = 128;
    double noise_sigma = 0.02;

    // Organ geometry, as fractions of image_size / of the organ semi-major axis.
    // The organ silhouette is the same in every slice, like registered scans
    // resampled to a common frame; glands and nucleus hang off that frame, so
    // all per-slice shape variation lives in the band's inner ellipse.
    double organ_axis = 0.37;    // semi-major, fraction of image size
    double organ_aspect = 0.80;  // b / a
    // The cortex band lies between the organ outline and an inner ellipse
    // whose axes and center shift vary per slice, so band thickness varies
    // smoothly around the ring and locally thick cortex is a normal variant.
    // Nucleus and gland sizes stay fixed relative to the organ: their
    // appearance is then fully implied by the visible organ outline, which
    // keeps masked completion of these high-contrast features well-posed.
    double inner_axis_lo = 0.72, inner_axis_hi = 0.86;
    double inner_offset_hi = 0.06;  // inner-center shift, fraction of a
    double nucleus_outer = 0.26;    // nucleus: radius <= nucleus_outer * a
    double gland_offset = 0.78;     // gland centers at +/- gland_offset * a
    double gland_radius = 0.15;     // gland radius, fraction of a

    // Anomaly placement (top/bottom sectors so patches stay clear of the
    // glands) and size in image fractions. Distinct patches float in the
    // organ interior; camouflage patches grow inward from the cortex band.
    double anomaly_radius_lo = 0.30, anomaly_radius_hi = 0.62;
    double anomaly_axis_lo = 0.06, anomaly_axis_hi = 0.085;

    // "distinct" anomalies sit in the gaps of both intensity axes;
    // "camouflage" ones copy the cortex intensity in x while y keeps the
    // organ's value, so in x they pass for a locally thicker cortex band but
    // the cross-modality pairing is broken.
    double distinct_intensity_x = 0.575;
    double distinct_intensity_y = 0.45;
    double camouflage_intensity_x = 0.45;
    double camouflage_intensity_y = 0.30;

    uint64_t seed = 1234;
};

// Four classes with scrambled x->y anchor assignment, so the y ordering does
// not follow the x ordering and intensity gaps differ between modalities.
PhantomSpec default_phantom_spec();

// Validates the spec: >= 1 class, pairwise-distinct x anchors (injective
// class -> (x, y) intensity assignment), distinct anomaly clear of every
// class anchor, camouflage anomaly within 0.01 of its matched class in x and
// more than 0.5 away from that class's mapping in y.
void validate_phantom_spec(const PhantomSpec& spec);

// The anomaly mode a generated slice carries: train slices are clean; val and
// test slices alternate distinct (even index) and camouflage (odd index).
AnomalyMode phantom_anomaly_mode(Split split, int index);

// One deterministic slice; identical (spec, split, index) gives bit-identical
// output regardless of what else was generated.
SlicePair generate_phantom_slice(const PhantomSpec& spec, Split split, int index);

std::vector<SlicePair> generate_phantom(const PhantomSpec& spec, int n_slices, Split split);

// FNV-1a over the spec's defining fields; pure function of the spec.
uint64_t phantom_spec_digest(const PhantomSpec& spec);

}  // namespace mmccd::data
