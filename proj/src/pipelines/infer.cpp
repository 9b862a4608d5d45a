#include "mmccd/pipelines/infer.hpp"

#include <cmath>
#include <filesystem>

#include "mmccd/core/digest.hpp"
#include "mmccd/core/errors.hpp"
#include "mmccd/core/parallel.hpp"
#include "mmccd/eval/metrics.hpp"
#include "mmccd/pipelines/baselines.hpp"
#include "mmccd/pipelines/model_io.hpp"
#include "mmccd/pipelines/train.hpp"

namespace fs = std::filesystem;

namespace mmccd::pipelines {
namespace {

void copy_row(Tensor& dst, int row, const Tensor& src) {
    std::copy(src.v.begin(), src.v.end(), dst.v.begin() + size_t(row) * src.size());
}

Tensor take_row(const Tensor& src, int row) {
    Tensor one(1, src.c, src.h, src.w);
    std::copy(src.v.begin() + size_t(row) * one.size(),
              src.v.begin() + size_t(row + 1) * one.size(), one.v.begin());
    return one;
}

nn::Checkpoint load_model_file(const std::string& dir, const std::string& name) {
    fs::path p = fs::path(dir) / (name + ".ckpt");
    if (!fs::exists(p))
        throw std::runtime_error("missing checkpoint " + p.string() + "; train first");
    return nn::load_checkpoint(p.string());
}

nn::UNet unet_from(const nn::Checkpoint& ck) {
    if (ck.kind != "unet")
        throw std::runtime_error("checkpoint holds a '" + ck.kind + "', expected a unet");
    nn::UNet net(unet_config_from_json(ck.config));
    nn::assign_params(net.params(), ck.tensors);
    return net;
}

nn::Autoencoder ae_from(const nn::Checkpoint& ck) {
    if (ck.kind != "autoencoder")
        throw std::runtime_error("checkpoint holds a '" + ck.kind + "', expected an autoencoder");
    nn::Autoencoder net(ae_config_from_json(ck.config));
    nn::assign_params(net.params(), ck.tensors);
    return net;
}

}  // namespace

InferSettings infer_settings(const config::ExperimentConfig& cfg) {
    InferSettings s;
    s.sampler = cfg.sampler.kind == "ddpm" ? SamplerKind::ddpm : SamplerKind::ddim;
    s.ddim_steps = cfg.sampler.ddim_steps;
    s.reverse_noise = cfg.sampler.reverse_noise == "alg_literal"
                          ? diffusion::ReverseNoise::alg_literal
                          : diffusion::ReverseNoise::posterior;
    s.abs_error = cfg.error_map == "abs";
    return s;
}

Tensor error_map(const Tensor& a, const Tensor& b, bool abs_error) {
    if (!a.same_shape(b))
        throw std::invalid_argument("error_map: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    Tensor out(a.n, a.c, a.h, a.w);
    if (abs_error)
        kernels::ops().abs_diff(a.size(), a.data(), b.data(), out.data());
    else
        kernels::ops().sq_diff(a.size(), a.data(), b.data(), out.data());
    return out;
}

Tensor stack_modality_x(const std::vector<data::SlicePair>& slices) {
    if (slices.empty()) throw std::invalid_argument("no slices to stack");
    const Tensor& first = slices[0].x;
    Tensor out(int(slices.size()), first.c, first.h, first.w);
    for (size_t i = 0; i < slices.size(); ++i) {
        if (!slices[i].x.same_shape(first))
            throw std::invalid_argument("slice shapes differ in batch");
        copy_row(out, int(i), slices[i].x);
    }
    return out;
}

uint64_t slice_stream(const data::SlicePair& slice) {
    Digest d;
    d.update(slice.subject_id.data(), slice.subject_id.size());
    int32_t idx = slice.slice_index;
    d.update(&idx, sizeof(idx));
    return d.value();
}

void apply_result_threshold(InferenceResult& r, double h) {
    r.threshold = h;
    r.binary_mask = eval::apply_threshold(r.anomaly_score, h);
}

InferenceResult infer_mmccd(nn::Denoiser& f, nn::Translator& g, const Tensor& x,
                            const masking::MaskSet& masks, const diffusion::NoiseSchedule& s,
                            const InferSettings& settings, Rng slice_rng, bool keep_per_mask) {
    if (x.n != 1 || x.c != 1)
        throw std::invalid_argument("infer_mmccd expects a single (1,1,h,w) slice");
    if (masks.height != x.h || masks.width != x.w)
        throw std::invalid_argument("mask set built for a different image size");
    int R = int(masks.masks.size());
    if (R < 1) throw std::invalid_argument("empty mask set");

    // One terminal noise draw shared by every mask's chain; per-mask streams
    // supply the condition corruption and any ancestral step noise.
    Rng yT_rng = slice_rng.fork(0);
    Tensor y_T = normal_like(x, yT_rng);
    std::vector<Rng> mask_rng;
    mask_rng.reserve(size_t(R));
    for (int r = 0; r < R; ++r) mask_rng.push_back(slice_rng.fork(uint64_t(1 + r)));

    Tensor x_hat(R, 1, x.h, x.w), y(R, 1, x.h, x.w);
    for (int r = 0; r < R; ++r) {
        Tensor eps = normal_like(x, mask_rng[size_t(r)]);
        copy_row(x_hat, r, masking::apply_mask_noise(x, masks.masks[size_t(r)].as_image, eps));
        copy_row(y, r, y_T);
    }

    // All masks advance together: each reverse step is one batched model call.
    if (settings.sampler == SamplerKind::ddim) {
        int steps = settings.ddim_steps > 0 ? settings.ddim_steps : std::max(1, s.T / 10);
        std::vector<int> taus = diffusion::ddim_timesteps(s.T, steps);
        for (size_t i = 0; i < taus.size(); ++i) {
            int t = taus[i];
            int t_prev = i + 1 < taus.size() ? taus[i + 1] : 0;
            Tensor y0_hat = f.predict(y, x_hat, t);
            y = diffusion::ddim_reverse_step(y0_hat, y, t, t_prev, s);
        }
    } else {
        for (int t = s.T; t >= 1; --t) {
            Tensor y0_hat = f.predict(y, x_hat, t);
            if (t > 1) {
                Tensor eps(R, 1, x.h, x.w);
                for (int r = 0; r < R; ++r) {
                    Tensor e = normal_like(x, mask_rng[size_t(r)]);
                    copy_row(eps, r, e);
                }
                y = diffusion::ddpm_reverse_step(y0_hat, y, t, s, &eps, settings.reverse_noise);
            } else {
                y = diffusion::ddpm_reverse_step(y0_hat, y, t, s);
            }
        }
    }

    // Backward translation sees the full generated image, never a masked one.
    Tensor x_bar = g.translate(y);
    std::vector<Tensor> errs;
    errs.reserve(size_t(R));
    for (int r = 0; r < R; ++r) errs.push_back(error_map(take_row(x_bar, r), x, settings.abs_error));

    masking::AggregateResult agg = masking::aggregate_anomaly(errs, masks);
    InferenceResult res;
    res.anomaly_score = std::move(agg.score);
    res.uncovered_pixels = agg.uncovered_pixels;
    if (keep_per_mask) res.per_mask_errors = std::move(errs);
    apply_result_threshold(res, res.threshold);  // +inf until a threshold is chosen
    return res;
}

InferenceResult infer_cyclic_unet(nn::Translator& f, nn::Translator& g, const Tensor& x,
                                  bool abs_error) {
    Tensor y_hat = f.translate(x);
    if (!y_hat.same_shape(x)) throw std::invalid_argument("translator changed the image shape");
    Tensor x_bar = g.translate(y_hat);
    if (!x_bar.same_shape(x)) throw std::invalid_argument("translator changed the image shape");

    InferenceResult res;
    res.anomaly_score = error_map(x_bar, x, abs_error);
    double drift = 0.0;
    for (size_t i = 0; i < x.size(); ++i)
        drift += std::abs(double(y_hat.v[i]) - double(x.v[i]));
    res.collapsed_model = drift / double(x.size()) < 1e-6;
    apply_result_threshold(res, res.threshold);
    return res;
}

std::vector<SliceScore> run_inference(const config::ExperimentConfig& cfg,
                                      const std::vector<data::SlicePair>& slices) {
    std::vector<SliceScore> out(slices.size());
    if (slices.empty()) return out;
    for (size_t i = 0; i < slices.size(); ++i) {
        out[i].subject_id = slices[i].subject_id;
        out[i].slice_index = slices[i].slice_index;
        out[i].split = slices[i].split;
    }
    bool abs_err = cfg.error_map == "abs";

    if (cfg.method == "mmccd") {
        nn::Checkpoint ckf = load_model_file(cfg.output_dir, "denoiser");
        nn::Checkpoint ckg = load_model_file(cfg.output_dir, "translator");
        nn::UNet fnet = unet_from(ckf), gnet = unet_from(ckg);
        if (ckf.schedule.is_null())
            throw std::runtime_error("denoiser checkpoint lacks its noise schedule");
        diffusion::NoiseSchedule sched = schedule_from_json(ckf.schedule);
        int S = fnet.cfg.input_size;
        masking::MaskSet masks = masking::build_mask_set(
            S, S, cfg.mask.extent, cfg.mask.stride, cfg.mask.horizontal, cfg.mask.vertical);
        InferSettings settings = infer_settings(cfg);
        nn::UNetDenoiser f(&fnet);
        nn::UNetTranslator g(&gnet);
        parallel_for(int(slices.size()), cfg.workers, [&](int i) {
            Rng rng = Rng(cfg.seed).fork(slice_stream(slices[size_t(i)]));
            InferenceResult r =
                infer_mmccd(f, g, slices[size_t(i)].x, masks, sched, settings, rng);
            out[size_t(i)].score = std::move(r.anomaly_score);
            out[size_t(i)].uncovered_pixels = r.uncovered_pixels;
        });
    } else if (cfg.method == "cyclic_unet") {
        nn::UNet fnet = unet_from(load_model_file(cfg.output_dir, "forward"));
        nn::UNet gnet = unet_from(load_model_file(cfg.output_dir, "backward"));
        nn::UNetTranslator f(&fnet), g(&gnet);
        parallel_for(int(slices.size()), cfg.workers, [&](int i) {
            InferenceResult r = infer_cyclic_unet(f, g, slices[size_t(i)].x, abs_err);
            out[size_t(i)].score = std::move(r.anomaly_score);
            out[size_t(i)].collapsed_model = r.collapsed_model;
        });
    } else if (cfg.method == "ae" || cfg.method == "vae" || cfg.method == "dae") {
        nn::Autoencoder net = ae_from(load_model_file(cfg.output_dir, "model"));
        Tensor x = stack_modality_x(slices);
        Tensor err = error_map(reconstruct_autoencoder(net, x), x, abs_err);
        for (size_t i = 0; i < slices.size(); ++i) out[i].score = take_row(err, int(i));
    } else if (cfg.method == "ddpm_uncond") {
        nn::Checkpoint ck = load_model_file(cfg.output_dir, "model");
        nn::UNet net = unet_from(ck);
        if (ck.schedule.is_null())
            throw std::runtime_error("model checkpoint lacks its noise schedule");
        diffusion::NoiseSchedule sched = schedule_from_json(ck.schedule);
        int t_test = ck.config.contains("t_test") ? ck.config.at("t_test").get<int>()
                                                  : std::max(1, sched.T / 2);
        Tensor x = stack_modality_x(slices);
        Tensor eps = uncond_noise_batch(cfg.seed, slices);
        Tensor err = error_map(reconstruct_ddpm_uncond(net, x, t_test, sched, eps), x, abs_err);
        for (size_t i = 0; i < slices.size(); ++i) out[i].score = take_row(err, int(i));
    } else {
        throw ConfigError("unknown method: " + cfg.method);
    }
    return out;
}

uint64_t scores_digest(const std::vector<SliceScore>& scores) {
    Digest d;
    for (const SliceScore& s : scores) {
        d.update(s.subject_id.data(), s.subject_id.size());
        int32_t idx = s.slice_index;
        d.update(&idx, sizeof(idx));
        d.update_vec(s.score.v);
    }
    return d.value();
}

}  // namespace mmccd::pipelines
