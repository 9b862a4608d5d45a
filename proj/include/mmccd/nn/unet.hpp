#pragma once

#include <string>
#include <vector>

#include "mmccd/nn/layers.hpp"

namespace mmccd::nn {

struct UNetConfig {
    int base_width = 64;
    int depth = 3;
    bool time_embedding = false;
    int in_channels = 1;
    int out_channels = 1;
    int input_size = 128;  // square inputs
};

// Skip-connected encoder-decoder. Channel width doubles per level; the step
// index (when enabled) enters every block as a learned per-channel bias. The
// output head is zero-initialized so a fresh network is the zero map.
template <typename T>
struct UNetT {
    UNetConfig cfg;
    int emb_dim = 0;
    std::optional<LinearT<T>> emb_fc;
    std::vector<ConvBlockT<T>> enc;  // depth+1 blocks, pools between
    std::vector<ConvBlockT<T>> dec;  // depth blocks, upsample + skip concat
    Conv2dT<T> head;
    TensorT<T> emb_pre_saved;

    explicit UNetT(const UNetConfig& c) : cfg(c) {
        if (cfg.base_width < 1 || cfg.depth < 1 || cfg.in_channels < 1 || cfg.out_channels < 1)
            throw std::invalid_argument("unet: bad config");
        int size = cfg.input_size;
        for (int i = 0; i < cfg.depth; ++i) {
            if (size % 2 != 0)
                throw std::invalid_argument("unet: input size " + std::to_string(cfg.input_size) +
                                            " not divisible by 2^" + std::to_string(cfg.depth));
            size /= 2;
        }
        if (size < 4)
            throw std::invalid_argument("unet: bottleneck " + std::to_string(size) + "x" +
                                        std::to_string(size) + " below 4x4");
        emb_dim = cfg.time_embedding ? 4 * cfg.base_width : 0;
        if (cfg.time_embedding) emb_fc.emplace(emb_dim, emb_dim);
        auto width = [&](int level) { return cfg.base_width << level; };
        enc.emplace_back(cfg.in_channels, width(0), emb_dim);
        for (int i = 1; i <= cfg.depth; ++i) enc.emplace_back(width(i - 1), width(i), emb_dim);
        for (int i = cfg.depth; i >= 1; --i)
            dec.emplace_back(width(i) + width(i - 1), width(i - 1), emb_dim);
        head = Conv2dT<T>(width(0), cfg.out_channels, 1);  // stays zero-initialized
    }

    void init(Rng& rng) {
        if (emb_fc) emb_fc->init(rng);
        for (auto& blk : enc) blk.init(rng);
        for (auto& blk : dec) blk.init(rng);
        head.w.zero();
        head.b.zero();
    }

    TensorT<T> forward(const TensorT<T>& x, const std::vector<int>& t = {}, bool save = false) {
        if (x.c != cfg.in_channels || x.h != cfg.input_size || x.w != cfg.input_size)
            throw std::invalid_argument("unet: expected (n," + std::to_string(cfg.in_channels) +
                                        "," + std::to_string(cfg.input_size) + "," +
                                        std::to_string(cfg.input_size) + "), got " +
                                        x.shape_str());
        TensorT<T> emb;
        if (cfg.time_embedding) {
            if (static_cast<int>(t.size()) != x.n)
                throw std::invalid_argument("unet: need one step index per sample");
            TensorT<T> e1 = emb_fc->forward(time_embedding<T>(t, emb_dim), save);
            if (save) emb_pre_saved = e1;
            emb = silu(e1);
        } else if (!t.empty()) {
            throw std::invalid_argument("unet: step indices passed to an unconditioned network");
        }
        const TensorT<T>* e = cfg.time_embedding ? &emb : nullptr;
        std::vector<TensorT<T>> skips;
        TensorT<T> h = enc[0].forward(x, e, save);
        for (int i = 1; i <= cfg.depth; ++i) {
            skips.push_back(h);
            h = enc[static_cast<size_t>(i)].forward(avgpool2(h), e, save);
        }
        for (int j = 0; j < cfg.depth; ++j) {
            TensorT<T> up = upsample2(h);
            h = dec[static_cast<size_t>(j)].forward(
                concat_channels(up, skips[static_cast<size_t>(cfg.depth - 1 - j)]), e, save);
        }
        return head.forward(h, save);
    }

    // Accumulates parameter gradients, returns dL/dx.
    TensorT<T> backward(const TensorT<T>& dy) {
        TensorT<T> demb;
        TensorT<T>* de = nullptr;
        if (cfg.time_embedding) {
            demb = TensorT<T>(dy.n, emb_dim, 1, 1);
            de = &demb;
        }
        TensorT<T> dh = head.backward(dy);
        std::vector<TensorT<T>> dskip(static_cast<size_t>(cfg.depth));
        for (int j = cfg.depth - 1; j >= 0; --j) {
            TensorT<T> dcat = dec[static_cast<size_t>(j)].backward(dh, de);
            auto [dup, dsk] = split_channels(dcat, cfg.base_width << (cfg.depth - j));
            dskip[static_cast<size_t>(cfg.depth - 1 - j)] = std::move(dsk);
            dh = upsample2_backward(dup);
        }
        for (int i = cfg.depth; i >= 0; --i) {
            if (i < cfg.depth) {
                const TensorT<T>& extra = dskip[static_cast<size_t>(i)];
                if constexpr (std::is_same_v<T, float>)
                    kernels::ops().vadd(dh.size(), dh.data(), extra.data(), dh.data());
                else
                    kernels::ref::vadd(dh.size(), dh.data(), extra.data(), dh.data());
            }
            dh = enc[static_cast<size_t>(i)].backward(dh, de);
            if (i > 0) dh = avgpool2_backward(dh);
        }
        if (cfg.time_embedding) {
            TensorT<T> de1(demb.n, emb_dim, 1, 1);
            detail::silu_bwd(emb_pre_saved.size(), emb_pre_saved.data(), demb.data(), de1.data());
            emb_fc->backward(de1);
        }
        return dh;
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        if (emb_fc) emb_fc->collect(out, "temb_fc");
        for (size_t i = 0; i < enc.size(); ++i) enc[i].collect(out, "enc" + std::to_string(i));
        for (size_t j = 0; j < dec.size(); ++j) dec[j].collect(out, "dec" + std::to_string(j));
        head.collect(out, "head");
        return out;
    }

    void zero_grad() {
        for (auto& p : params()) p.grad->zero();
    }

    size_t param_count() {
        size_t n = 0;
        for (auto& p : params()) n += p.value->size();
        return n;
    }
};

using UNet = UNetT<float>;

}  // namespace mmccd::nn
