#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace mmccd {

// FNV-1a 64-bit. Used to fingerprint generated datasets and score maps so
// seeded runs can be compared for bit-identical output.
class Digest {
  public:
    void update(const void* bytes, size_t len) {
        const auto* p = static_cast<const uint8_t*>(bytes);
        for (size_t i = 0; i < len; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001B3ull;
        }
    }
    template <typename T>
    void update_vec(const T& vec) {
        update(vec.data(), vec.size() * sizeof(typename T::value_type));
    }
    uint64_t value() const { return state_; }
    std::string hex() const;

  private:
    uint64_t state_ = 0xCBF29CE484222325ull;
};

std::string file_digest_hex(const std::string& path);

}  // namespace mmccd
