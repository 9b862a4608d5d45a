#include "mmccd/core/npy.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmccd {
namespace {

void write_header(std::ofstream& out, const char* descr, int h, int w) {
    std::string dict = std::string("{'descr': '") + descr +
                       "', 'fortran_order': False, 'shape': (" + std::to_string(h) +
                       ", " + std::to_string(w) + "), }";
    size_t total = 10 + dict.size() + 1;  // magic+version+len, dict, trailing \n
    size_t pad = (64 - total % 64) % 64;
    dict.append(pad, ' ');
    dict.push_back('\n');
    uint16_t hlen = static_cast<uint16_t>(dict.size());
    out.write("\x93NUMPY\x01\x00", 8);
    out.put(static_cast<char>(hlen & 0xFF));
    out.put(static_cast<char>(hlen >> 8));
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
}

struct NpyInfo {
    std::string descr;
    int h = 0, w = 0;
    size_t data_offset = 0;
};

NpyInfo read_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0)
        throw std::runtime_error("npy: bad magic in " + path);
    unsigned char lenb[2];
    in.read(reinterpret_cast<char*>(lenb), 2);
    size_t hlen = lenb[0] | (static_cast<size_t>(lenb[1]) << 8);
    std::string dict(hlen, '\0');
    in.read(dict.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("npy: truncated header in " + path);

    NpyInfo info;
    info.data_offset = 10 + hlen;
    auto grab = [&](const char* key) -> std::string {
        size_t p = dict.find(key);
        if (p == std::string::npos)
            throw std::runtime_error("npy: missing " + std::string(key) + " in " + path);
        return dict.substr(p);
    };
    std::string d = grab("'descr'");
    size_t q1 = d.find('\'', 8);
    size_t q2 = d.find('\'', q1 + 1);
    info.descr = d.substr(q1 + 1, q2 - q1 - 1);
    if (grab("'fortran_order'").find("False", 0) == std::string::npos)
        throw std::runtime_error("npy: fortran order unsupported in " + path);
    std::string s = grab("'shape'");
    size_t po = s.find('(');
    size_t pc = s.find(')');
    std::string shape = s.substr(po + 1, pc - po - 1);
    if (std::sscanf(shape.c_str(), "%d , %d", &info.h, &info.w) != 2 &&
        std::sscanf(shape.c_str(), "%d, %d", &info.h, &info.w) != 2)
        throw std::runtime_error("npy: expected 2D shape in " + path + " got (" + shape + ")");
    if (info.h <= 0 || info.w <= 0)
        throw std::runtime_error("npy: bad shape in " + path);
    return info;
}

}  // namespace

void save_npy(const std::string& path, const float* data, int h, int w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("npy: cannot write " + path);
    write_header(out, "<f4", h, w);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(sizeof(float) * h * w));
    if (!out) throw std::runtime_error("npy: write failed for " + path);
}

void save_npy(const std::string& path, const BoolImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("npy: cannot write " + path);
    write_header(out, "|u1", img.h, img.w);
    out.write(reinterpret_cast<const char*>(img.v.data()),
              static_cast<std::streamsize>(img.v.size()));
    if (!out) throw std::runtime_error("npy: write failed for " + path);
}

Tensor load_npy_f32(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("npy: cannot open " + path);
    NpyInfo info = read_header(in, path);
    if (info.descr != "<f4")
        throw std::runtime_error("npy: expected <f4 in " + path + " got " + info.descr);
    Tensor t = Tensor::image(1, info.h, info.w);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!in) throw std::runtime_error("npy: truncated data in " + path);
    return t;
}

BoolImage load_npy_u8(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("npy: cannot open " + path);
    NpyInfo info = read_header(in, path);
    if (info.descr != "|u1")
        throw std::runtime_error("npy: expected |u1 in " + path + " got " + info.descr);
    BoolImage img(info.h, info.w);
    in.read(reinterpret_cast<char*>(img.v.data()),
            static_cast<std::streamsize>(img.v.size()));
    if (!in) throw std::runtime_error("npy: truncated data in " + path);
    return img;
}

}  // namespace mmccd
