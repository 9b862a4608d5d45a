#include "mmccd/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace mmccd::nn {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'C', 'C', 'K', 'P', 'T', '\x01'};
constexpr uint32_t kVersion = 1;

void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("checkpoint: truncated header");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["version"] = kVersion;
    header["kind"] = ckpt.kind;
    header["config"] = ckpt.config;
    header["schedule"] = ckpt.schedule;
    header["step"] = ckpt.step;
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& [name, t] : ckpt.tensors)
        manifest.push_back({{"name", name}, {"shape", {t.n, t.c, t.h, t.w}}});
    header["tensors"] = manifest;
    std::string htext = header.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_u64(os, htext.size());
    os.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: bad magic: " + path);
    uint64_t hlen = read_u64(is);
    if (hlen > (1ull << 30)) throw std::runtime_error("checkpoint: implausible header size");
    std::string htext(hlen, '\0');
    is.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw std::runtime_error("checkpoint: truncated header: " + path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(htext);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint: corrupt header: " + std::string(e.what()));
    }
    if (header.value("version", 0u) != kVersion)
        throw std::runtime_error("checkpoint: unsupported version in " + path);

    Checkpoint ckpt;
    ckpt.kind = header.value("kind", std::string());
    ckpt.config = header.value("config", nlohmann::json());
    ckpt.schedule = header.value("schedule", nlohmann::json());
    ckpt.step = header.value("step", 0ll);
    for (const auto& entry : header.at("tensors")) {
        std::string name = entry.at("name").get<std::string>();
        auto shape = entry.at("shape");
        Tensor t(shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>(),
                 shape.at(3).get<int>());
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(float)));
        if (!is) throw std::runtime_error("checkpoint: truncated tensor " + name + " in " + path);
        ckpt.tensors.emplace_back(std::move(name), std::move(t));
    }
    return ckpt;
}

std::vector<std::pair<std::string, Tensor>> snapshot_params(
    const std::vector<ParamRef<float>>& params) {
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(params.size());
    for (const auto& p : params) out.emplace_back(p.name, *p.value);
    return out;
}

void assign_params(const std::vector<ParamRef<float>>& params,
                   const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, t] : tensors) by_name[name] = &t;
    for (const auto& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end())
            throw std::runtime_error("checkpoint: missing tensor " + p.name);
        if (!it->second->same_shape(*p.value))
            throw std::runtime_error("checkpoint: shape mismatch for " + p.name + ": file has " +
                                     it->second->shape_str() + ", model wants " +
                                     p.value->shape_str());
        *p.value = *it->second;
    }
}

}  // namespace mmccd::nn
