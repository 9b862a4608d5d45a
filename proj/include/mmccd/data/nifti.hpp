#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmccd::data {

// Scalar volume, voxel order x-fastest then y then z.
struct Volume {
    int nx = 0, ny = 0, nz = 0;
    std::vector<float> v;

    Volume() = default;
    Volume(int x, int y, int z) : nx(x), ny(y), nz(z), v(size_t(x) * y * z, 0.0f) {}

    size_t size() const { return v.size(); }
    float& at(int x, int y, int z) { return v[(size_t(z) * ny + y) * nx + x]; }
    float at(int x, int y, int z) const { return v[(size_t(z) * ny + y) * nx + x]; }
};

// NIfTI-1 single-file volumes (.nii or .nii.gz), little-endian only.
// Supported on-disk sample types: uint8, int16, int32, float32, float64.
// scl_slope/scl_inter are applied on load when slope is nonzero.
Volume load_nifti(const std::string& path);

// Stores vol.v cast to `datatype` verbatim and records the given scl fields;
// callers that want a round trip through an integer type must pass values
// representable in it.
void save_nifti(const std::string& path, const Volume& vol, int16_t datatype = 16,
                float scl_slope = 1.0f, float scl_inter = 0.0f);

}  // namespace mmccd::data
