#pragma once

#include <string>
#include <vector>

#include "mmccd/nn/layers.hpp"

namespace mmccd::nn {

enum class AeVariant { ae, vae, dae };

inline const char* ae_variant_name(AeVariant v) {
    switch (v) {
        case AeVariant::vae: return "vae";
        case AeVariant::dae: return "dae";
        default: return "ae";
    }
}

inline AeVariant ae_variant_from_name(const std::string& s) {
    if (s == "ae") return AeVariant::ae;
    if (s == "vae") return AeVariant::vae;
    if (s == "dae") return AeVariant::dae;
    throw std::invalid_argument("unknown autoencoder variant: " + s);
}

struct AutoencoderConfig {
    AeVariant variant = AeVariant::ae;
    int base_width = 16;
    int depth = 2;
    int latent_dim = 32;
    int input_size = 128;
    int in_channels = 1;
    int out_channels = 1;
    double kl_weight = 1e-3;  // vae
    double dae_sigma = 0.2;   // dae input corruption (applied by the trainer)
};

template <typename T>
TensorT<T> reshape(const TensorT<T>& x, int n, int c, int h, int w) {
    if (x.size() != static_cast<size_t>(n) * c * h * w)
        throw std::invalid_argument("reshape: element count mismatch");
    TensorT<T> y(n, c, h, w);
    y.v = x.v;
    return y;
}

// Encoder-decoder without skip connections, bottlenecked through a linear
// latent. The VAE keeps mean/log-variance heads in one doubled linear; eval
// decodes from the mean, training samples with the caller's rng.
template <typename T>
struct AutoencoderT {
    AutoencoderConfig cfg;
    std::vector<ConvBlockT<T>> enc;  // depth+1 blocks
    LinearT<T> to_latent;            // flat -> latent (vae: 2*latent)
    LinearT<T> from_latent;          // latent -> flat
    std::vector<ConvBlockT<T>> dec;  // depth blocks
    Conv2dT<T> head;
    int bottleneck_size = 0, bottleneck_c = 0, flat_dim = 0;
    TensorT<T> mu_saved, logvar_saved, eps_saved;

    struct Out {
        TensorT<T> recon;
        double kl = 0.0;
    };

    explicit AutoencoderT(const AutoencoderConfig& c) : cfg(c) {
        if (cfg.base_width < 1 || cfg.depth < 1 || cfg.latent_dim < 1 || cfg.in_channels < 1 ||
            cfg.out_channels < 1)
            throw std::invalid_argument("autoencoder: bad config");
        int size = cfg.input_size;
        for (int i = 0; i < cfg.depth; ++i) {
            if (size % 2 != 0 || size < 2)
                throw std::invalid_argument("autoencoder: input size " +
                                            std::to_string(cfg.input_size) +
                                            " not divisible by 2^" + std::to_string(cfg.depth));
            size /= 2;
        }
        bottleneck_size = size;
        bottleneck_c = cfg.base_width << cfg.depth;
        flat_dim = bottleneck_c * bottleneck_size * bottleneck_size;
        auto width = [&](int level) { return cfg.base_width << level; };
        enc.emplace_back(cfg.in_channels, width(0), 0);
        for (int i = 1; i <= cfg.depth; ++i) enc.emplace_back(width(i - 1), width(i), 0);
        int lat_out = cfg.variant == AeVariant::vae ? 2 * cfg.latent_dim : cfg.latent_dim;
        to_latent = LinearT<T>(flat_dim, lat_out);
        from_latent = LinearT<T>(cfg.latent_dim, flat_dim);
        for (int i = cfg.depth; i >= 1; --i) dec.emplace_back(width(i), width(i - 1), 0);
        head = Conv2dT<T>(width(0), cfg.out_channels, 1);  // stays zero-initialized
    }

    void init(Rng& rng) {
        for (auto& blk : enc) blk.init(rng);
        to_latent.init(rng);
        from_latent.init(rng);
        for (auto& blk : dec) blk.init(rng);
        head.w.zero();
        head.b.zero();
    }

    Out forward(const TensorT<T>& x, Rng* sample_rng, bool save = false) {
        if (x.c != cfg.in_channels || x.h != cfg.input_size || x.w != cfg.input_size)
            throw std::invalid_argument("autoencoder: bad input shape " + x.shape_str());
        TensorT<T> h = enc[0].forward(x, nullptr, save);
        for (int i = 1; i <= cfg.depth; ++i)
            h = enc[static_cast<size_t>(i)].forward(avgpool2(h), nullptr, save);
        TensorT<T> lat = to_latent.forward(reshape(h, x.n, flat_dim, 1, 1), save);
        Out out;
        TensorT<T> z;
        if (cfg.variant == AeVariant::vae) {
            auto [mu, logvar] = split_channels(lat, cfg.latent_dim);
            double kl = 0.0;
            for (size_t i = 0; i < mu.size(); ++i) {
                double m = static_cast<double>(mu.v[i]), lv = static_cast<double>(logvar.v[i]);
                kl += 0.5 * (m * m + std::exp(lv) - 1.0 - lv);
            }
            out.kl = kl / static_cast<double>(x.n);
            TensorT<T> eps(mu.n, mu.c, 1, 1);
            if (sample_rng) {
                z = mu;
                for (size_t i = 0; i < z.size(); ++i) {
                    eps.v[i] = static_cast<T>(sample_rng->normal());
                    z.v[i] += std::exp(logvar.v[i] / T(2)) * eps.v[i];
                }
            } else {
                z = mu;  // eval decodes the latent mean
            }
            if (save) {
                mu_saved = std::move(mu);
                logvar_saved = std::move(logvar);
                eps_saved = std::move(eps);
            }
        } else {
            z = std::move(lat);
        }
        TensorT<T> g = reshape(from_latent.forward(z, save), x.n, bottleneck_c, bottleneck_size,
                               bottleneck_size);
        for (int j = 0; j < cfg.depth; ++j)
            g = dec[static_cast<size_t>(j)].forward(upsample2(g), nullptr, save);
        out.recon = head.forward(g, save);
        return out;
    }

    // d_recon: gradient of the reconstruction term; the VAE KL term's gradient
    // is added here, scaled by kl_weight, batch-mean convention.
    TensorT<T> backward(const TensorT<T>& d_recon, double kl_weight = 0.0) {
        int n = d_recon.n;
        TensorT<T> dh = head.backward(d_recon);
        for (int j = cfg.depth - 1; j >= 0; --j)
            dh = upsample2_backward(dec[static_cast<size_t>(j)].backward(dh, nullptr));
        TensorT<T> dz = from_latent.backward(reshape(dh, n, flat_dim, 1, 1));
        TensorT<T> dlat;
        if (cfg.variant == AeVariant::vae) {
            if (mu_saved.size() == 0) throw std::logic_error("vae backward before forward(save)");
            TensorT<T> dmu(n, cfg.latent_dim, 1, 1), dlv(n, cfg.latent_dim, 1, 1);
            T invb = T(1) / static_cast<T>(n);
            for (size_t i = 0; i < dz.size(); ++i) {
                dmu.v[i] = dz.v[i] + static_cast<T>(kl_weight) * mu_saved.v[i] * invb;
                dlv.v[i] = dz.v[i] * eps_saved.v[i] * std::exp(logvar_saved.v[i] / T(2)) / T(2) +
                           static_cast<T>(kl_weight) * (std::exp(logvar_saved.v[i]) - T(1)) *
                               invb / T(2);
            }
            dlat = concat_channels(dmu, dlv);
        } else {
            dlat = std::move(dz);
        }
        dh = reshape(to_latent.backward(dlat), n, bottleneck_c, bottleneck_size, bottleneck_size);
        for (int i = cfg.depth; i >= 1; --i)
            dh = avgpool2_backward(enc[static_cast<size_t>(i)].backward(dh, nullptr));
        return enc[0].backward(dh, nullptr);
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        for (size_t i = 0; i < enc.size(); ++i) enc[i].collect(out, "enc" + std::to_string(i));
        to_latent.collect(out, "to_latent");
        from_latent.collect(out, "from_latent");
        for (size_t j = 0; j < dec.size(); ++j) dec[j].collect(out, "dec" + std::to_string(j));
        head.collect(out, "head");
        return out;
    }

    void zero_grad() {
        for (auto& p : params()) p.grad->zero();
    }

    size_t param_count() {
        size_t c = 0;
        for (auto& p : params()) c += p.value->size();
        return c;
    }
};

using Autoencoder = AutoencoderT<float>;

}  // namespace mmccd::nn
