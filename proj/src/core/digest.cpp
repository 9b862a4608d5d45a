#include "mmccd/core/digest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace mmccd {

std::string Digest::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

std::string file_digest_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("digest: cannot open " + path);
    Digest d;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        d.update(buf.data(), static_cast<size_t>(in.gcount()));
    }
    return d.hex();
}

}  // namespace mmccd
