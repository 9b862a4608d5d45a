#pragma once

#include <string>
#include <vector>

#include "mmccd/core/errors.hpp"
#include "mmccd/nn/unet.hpp"

namespace mmccd::nn {

// f(y_t, cond, t) -> y0_hat. Virtual so the pipelines can be exercised with
// closed-form stand-ins in tests.
struct Denoiser {
    virtual ~Denoiser() = default;
    virtual Tensor predict(const Tensor& y_t, const Tensor& cond, int t) = 0;
};

// g(y) -> x_hat, deterministic at inference.
struct Translator {
    virtual ~Translator() = default;
    virtual Tensor translate(const Tensor& y) = 0;
};

struct UNetDenoiser final : Denoiser {
    UNet* net;  // non-owning
    explicit UNetDenoiser(UNet* n) : net(n) {}
    Tensor predict(const Tensor& y_t, const Tensor& cond, int t) override {
        Tensor out = net->forward(concat_channels(y_t, cond), std::vector<int>(y_t.n, t));
        if (!all_finite(out))
            throw DivergenceError("denoiser output non-finite at t=" + std::to_string(t));
        return out;
    }
};

struct UNetTranslator final : Translator {
    UNet* net;  // non-owning
    explicit UNetTranslator(UNet* n) : net(n) {}
    Tensor translate(const Tensor& y) override {
        Tensor out = net->forward(y);
        if (!all_finite(out)) throw DivergenceError("translator output non-finite");
        return out;
    }
};

}  // namespace mmccd::nn
