#include "mmccd/data/nifti.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mmccd::data {
namespace {

constexpr int kHeaderSize = 348;

// Field offsets inside the NIfTI-1 header.
constexpr int kOffDim = 40;
constexpr int kOffDatatype = 70;
constexpr int kOffBitpix = 72;
constexpr int kOffPixdim = 76;
constexpr int kOffVoxOffset = 108;
constexpr int kOffSclSlope = 112;
constexpr int kOffSclInter = 116;
constexpr int kOffMagic = 344;

template <typename T>
T read_field(const unsigned char* buf, int off) {
    T out;
    std::memcpy(&out, buf + off, sizeof(T));
    return out;
}

template <typename T>
void write_field(unsigned char* buf, int off, T val) {
    std::memcpy(buf + off, &val, sizeof(T));
}

int bytes_per_sample(int16_t datatype) {
    switch (datatype) {
        case 2: return 1;    // uint8
        case 4: return 2;    // int16
        case 8: return 4;    // int32
        case 16: return 4;   // float32
        case 64: return 8;   // float64
        default: return 0;
    }
}

std::vector<unsigned char> gz_read_all(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<unsigned char> out;
    unsigned char chunk[1 << 16];
    int n;
    while ((n = gzread(f, chunk, sizeof(chunk))) > 0) out.insert(out.end(), chunk, chunk + n);
    bool bad = n < 0;
    gzclose(f);
    if (bad) throw std::runtime_error("decompression failed for " + path);
    return out;
}

}  // namespace

Volume load_nifti(const std::string& path) {
    std::vector<unsigned char> raw = gz_read_all(path);
    if (raw.size() < size_t(kHeaderSize)) throw std::runtime_error(path + ": truncated header");
    if (read_field<int32_t>(raw.data(), 0) != kHeaderSize)
        throw std::runtime_error(path + ": not a little-endian NIfTI-1 file");
    const char* magic = reinterpret_cast<const char*>(raw.data() + kOffMagic);
    if (std::strncmp(magic, "n+1", 4) != 0)
        throw std::runtime_error(path + ": unsupported magic (single-file n+1 expected)");

    int16_t dim[8];
    std::memcpy(dim, raw.data() + kOffDim, sizeof(dim));
    bool dims_ok = (dim[0] == 3) || (dim[0] == 4 && dim[4] == 1);
    if (!dims_ok || dim[1] <= 0 || dim[2] <= 0 || dim[3] <= 0)
        throw std::runtime_error(path + ": unsupported dimensionality");

    int16_t datatype = read_field<int16_t>(raw.data(), kOffDatatype);
    int bps = bytes_per_sample(datatype);
    if (bps == 0) throw std::runtime_error(path + ": unsupported datatype " + std::to_string(datatype));

    float vox_offset = read_field<float>(raw.data(), kOffVoxOffset);
    if (!(vox_offset >= kHeaderSize) || vox_offset != std::floor(vox_offset))
        throw std::runtime_error(path + ": bad vox_offset");
    size_t off = size_t(vox_offset);

    Volume vol(dim[1], dim[2], dim[3]);
    size_t need = off + vol.size() * size_t(bps);
    if (raw.size() < need) throw std::runtime_error(path + ": truncated data section");

    const unsigned char* d = raw.data() + off;
    for (size_t i = 0; i < vol.size(); ++i) {
        double x;
        switch (datatype) {
            case 2: x = d[i]; break;
            case 4: x = read_field<int16_t>(d, int(i * 2)); break;
            case 8: x = read_field<int32_t>(d, int(i * 4)); break;
            case 16: x = read_field<float>(d, int(i * 4)); break;
            default: x = read_field<double>(d, int(i * 8)); break;
        }
        vol.v[i] = float(x);
    }

    float slope = read_field<float>(raw.data(), kOffSclSlope);
    float inter = read_field<float>(raw.data(), kOffSclInter);
    if (slope != 0.0f && (slope != 1.0f || inter != 0.0f))
        for (float& x : vol.v) x = slope * x + inter;
    return vol;
}

void save_nifti(const std::string& path, const Volume& vol, int16_t datatype, float scl_slope,
                float scl_inter) {
    int bps = bytes_per_sample(datatype);
    if (bps == 0) throw std::invalid_argument("unsupported datatype " + std::to_string(datatype));
    if (vol.nx <= 0 || vol.ny <= 0 || vol.nz <= 0) throw std::invalid_argument("empty volume");

    // 348-byte header + 4-byte extension flag, then the data section.
    std::vector<unsigned char> buf(kHeaderSize + 4 + vol.size() * size_t(bps), 0);
    write_field<int32_t>(buf.data(), 0, kHeaderSize);
    int16_t dim[8] = {3, int16_t(vol.nx), int16_t(vol.ny), int16_t(vol.nz), 1, 1, 1, 1};
    std::memcpy(buf.data() + kOffDim, dim, sizeof(dim));
    write_field<int16_t>(buf.data(), kOffDatatype, datatype);
    write_field<int16_t>(buf.data(), kOffBitpix, int16_t(bps * 8));
    float pixdim[8] = {1, 1, 1, 1, 0, 0, 0, 0};
    std::memcpy(buf.data() + kOffPixdim, pixdim, sizeof(pixdim));
    write_field<float>(buf.data(), kOffVoxOffset, float(kHeaderSize + 4));
    write_field<float>(buf.data(), kOffSclSlope, scl_slope);
    write_field<float>(buf.data(), kOffSclInter, scl_inter);
    std::memcpy(buf.data() + kOffMagic, "n+1", 4);

    unsigned char* d = buf.data() + kHeaderSize + 4;
    for (size_t i = 0; i < vol.size(); ++i) {
        float x = vol.v[i];
        switch (datatype) {
            case 2: d[i] = (unsigned char)std::lrint(x); break;
            case 4: write_field<int16_t>(d, int(i * 2), int16_t(std::lrint(x))); break;
            case 8: write_field<int32_t>(d, int(i * 4), int32_t(std::lrint(x))); break;
            case 16: write_field<float>(d, int(i * 4), x); break;
            default: write_field<double>(d, int(i * 8), double(x)); break;
        }
    }

    bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw std::runtime_error("cannot create " + path);
        size_t written = 0;
        while (written < buf.size()) {
            int n = gzwrite(f, buf.data() + written, unsigned(buf.size() - written));
            if (n <= 0) {
                gzclose(f);
                throw std::runtime_error("write failed for " + path);
            }
            written += size_t(n);
        }
        gzclose(f);
    } else {
        FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) throw std::runtime_error("cannot create " + path);
        size_t n = std::fwrite(buf.data(), 1, buf.size(), f);
        std::fclose(f);
        if (n != buf.size()) throw std::runtime_error("write failed for " + path);
    }
}

}  // namespace mmccd::data
