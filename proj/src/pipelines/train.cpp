#include "mmccd/pipelines/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "mmccd/core/digest.hpp"
#include "mmccd/core/errors.hpp"
#include "mmccd/diffusion/steps.hpp"
#include "mmccd/eval/threshold.hpp"
#include "mmccd/masking/masks.hpp"
#include "mmccd/nn/loss.hpp"
#include "mmccd/pipelines/baselines.hpp"
#include "mmccd/pipelines/infer.hpp"
#include "mmccd/pipelines/model_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mmccd::pipelines {
namespace {

uint64_t name_stream(const std::string& name) {
    Digest d;
    d.update(name.data(), name.size());
    return d.value();
}

void check_square(const data::SlicePair& p) {
    if (p.x.n != 1 || p.x.c != 1 || p.x.h != p.x.w)
        throw std::invalid_argument("expected square (1,1,S,S) slices, got " + p.x.shape_str());
}

// Strip mask at a free offset (training-time placement is not limited to the
// stride grid).
Tensor strip_image(int S, bool horizontal, int offset, int extent) {
    Tensor m(1, 1, S, S);
    for (int i = offset; i < offset + extent; ++i)
        for (int j = 0; j < S; ++j) {
            if (horizontal)
                m.at(0, 0, i, j) = 1.0f;
            else
                m.at(0, 0, j, i) = 1.0f;
        }
    return m;
}

void copy_row(Tensor& dst, int row, const Tensor& src) {
    std::copy(src.v.begin(), src.v.end(), dst.v.begin() + size_t(row) * src.size());
}

double checked(double loss, const char* what) {
    if (!std::isfinite(loss))
        throw DivergenceError(std::string(what) + " loss went non-finite (" +
                              std::to_string(loss) + ")");
    return loss;
}

using Batch = std::vector<const data::SlicePair*>;

// Everything train_model needs to run one model's loop without knowing the
// method it belongs to.
struct ModelHandle {
    std::string name;
    std::string kind;  // "unet" | "autoencoder"
    json config_json;
    json schedule;     // null when the model has no diffusion schedule
    std::function<void(Rng&)> init;
    std::function<std::vector<nn::ParamRef<float>>()> params;
    std::function<double(const Batch&, Rng&, nn::Adam&)> step;
};

long long train_model(const config::ExperimentConfig& cfg, ModelHandle& h,
                      const std::vector<data::SlicePair>& train_slices, bool resume,
                      std::vector<std::string>* files) {
    fs::path dir(cfg.output_dir);
    fs::path ckpt_path = dir / (h.name + ".ckpt");
    fs::path log_path = dir / ("loss_" + h.name + ".txt");

    nn::Adam opt;
    opt.lr = cfg.train.learning_rate;
    long long start = 0;

    if (resume && fs::exists(ckpt_path)) {
        nn::Checkpoint ck = nn::load_checkpoint(ckpt_path.string());
        if (ck.kind != h.kind)
            throw std::runtime_error(ckpt_path.string() + ": checkpoint kind '" + ck.kind +
                                     "' does not match model '" + h.kind + "'");
        restore_from_checkpoint(ck, h.params(), &opt);
        start = ck.step;
    } else {
        Rng init_rng = Rng(cfg.seed).fork(name_stream("init:" + h.name));
        h.init(init_rng);
    }

    std::ofstream log(log_path, start > 0 ? std::ios::app : std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write " + log_path.string());

    auto save = [&](long long step) {
        nn::Checkpoint ck =
            make_checkpoint(h.kind, h.config_json, h.schedule, step, h.params(), &opt);
        nn::save_checkpoint(ckpt_path.string(), ck);
    };

    uint64_t model_stream = name_stream(h.name);
    long long ran = 0;
    for (long long step = start + 1; step <= cfg.train.max_steps; ++step) {
        Rng step_rng = Rng(cfg.seed).fork(model_stream + uint64_t(step));
        Batch batch(size_t(cfg.train.batch_size));
        for (auto& p : batch)
            p = &train_slices[size_t(step_rng.uniform_int(0, int(train_slices.size()) - 1))];
        double loss;
        try {
            loss = h.step(batch, step_rng, opt);
        } catch (const DivergenceError& e) {
            throw DivergenceError(h.name + " at step " + std::to_string(step) + ": " + e.what());
        }
        log << step << " " << loss << "\n";
        log.flush();
        ++ran;
        if (step % cfg.train.checkpoint_every == 0 && step < cfg.train.max_steps) save(step);
    }
    save(std::max(start, (long long)cfg.train.max_steps));
    if (files) files->push_back(ckpt_path.string());
    return ran;
}

std::vector<Tensor> reconstruction_scores(const Tensor& recon, const Tensor& x, bool abs_error) {
    std::vector<Tensor> out;
    out.reserve(size_t(x.n));
    Tensor err = error_map(recon, x, abs_error);
    for (int i = 0; i < x.n; ++i) {
        Tensor one(1, 1, x.h, x.w);
        std::copy(err.v.begin() + size_t(i) * one.size(),
                  err.v.begin() + size_t(i + 1) * one.size(), one.v.begin());
        out.push_back(std::move(one));
    }
    return out;
}

std::vector<BoolImage> collect_gts(const std::vector<data::SlicePair>& slices) {
    std::vector<BoolImage> out;
    out.reserve(slices.size());
    for (const auto& p : slices) out.push_back(p.anomaly_gt);
    return out;
}

}  // namespace

int input_size(const config::ExperimentConfig& cfg) {
    return cfg.data_source == "phantom" ? cfg.phantom.image_size : cfg.image_size;
}

nn::UNetConfig denoiser_config(const config::ExperimentConfig& cfg) {
    return {cfg.model.base_width, cfg.model.depth, true, 2, 1, input_size(cfg)};
}

nn::UNetConfig translator_config(const config::ExperimentConfig& cfg) {
    return {cfg.model.base_width, cfg.model.depth, false, 1, 1, input_size(cfg)};
}

nn::UNetConfig uncond_config(const config::ExperimentConfig& cfg) {
    return {cfg.model.base_width, cfg.model.depth, true, 1, 1, input_size(cfg)};
}

nn::AutoencoderConfig autoencoder_config(const config::ExperimentConfig& cfg, double dae_sigma) {
    nn::AutoencoderConfig c;
    c.variant = nn::ae_variant_from_name(cfg.method == "dae"   ? "dae"
                                         : cfg.method == "vae" ? "vae"
                                                               : "ae");
    c.base_width = cfg.baseline.base_width;
    c.depth = cfg.baseline.depth;
    c.latent_dim = cfg.baseline.latent_dim;
    c.input_size = input_size(cfg);
    c.kl_weight = cfg.baseline.kl_weight;
    c.dae_sigma = dae_sigma;
    return c;
}

MmccdBatch assemble_mmccd_batch(const Batch& batch, const diffusion::NoiseSchedule& s,
                                const config::MaskConfig& mask_cfg, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    check_square(*batch[0]);
    int S = batch[0]->x.h;
    int B = int(batch.size());
    if (mask_cfg.extent < 1 || mask_cfg.extent > S)
        throw std::invalid_argument("mask extent out of range for image size");

    MmccdBatch mb;
    mb.y_t = Tensor(B, 1, S, S);
    mb.x_hat = Tensor(B, 1, S, S);
    mb.y0 = Tensor(B, 1, S, S);
    mb.t.resize(size_t(B));
    for (int i = 0; i < B; ++i) {
        const data::SlicePair& p = *batch[size_t(i)];
        if (p.x.h != S || p.x.w != S || !p.y.same_shape(p.x))
            throw std::invalid_argument("batch mixes slice shapes");
        int t = rng.uniform_int(1, s.T);
        bool horiz;
        if (mask_cfg.horizontal && mask_cfg.vertical)
            horiz = rng.uniform_int(0, 1) == 0;
        else
            horiz = mask_cfg.horizontal;
        int offset = rng.uniform_int(0, S - mask_cfg.extent);
        Tensor eps_m = normal_like(p.x, rng);
        Tensor x_hat =
            masking::apply_mask_noise(p.x, strip_image(S, horiz, offset, mask_cfg.extent), eps_m);
        Tensor eps_y = normal_like(p.y, rng);
        Tensor y_t = diffusion::marginal_sample(p.y, t, eps_y, s);

        mb.t[size_t(i)] = t;
        copy_row(mb.y_t, i, y_t);
        copy_row(mb.x_hat, i, x_hat);
        copy_row(mb.y0, i, p.y);
    }
    return mb;
}

double train_step_mmccd(nn::UNet& f, nn::Adam& opt, const Batch& batch,
                        const diffusion::NoiseSchedule& s, const config::MaskConfig& mask_cfg,
                        Rng& rng) {
    MmccdBatch mb = assemble_mmccd_batch(batch, s, mask_cfg, rng);
    Tensor pred = f.forward(nn::concat_channels(mb.y_t, mb.x_hat), mb.t, true);
    Tensor dpred;
    double loss = checked(nn::l2_norm_loss(pred, mb.y0, &dpred), "denoiser");
    f.zero_grad();
    f.backward(dpred);
    opt.step(f.params());
    return loss;
}

double train_step_translation(nn::UNet& net, nn::Adam& opt, const Batch& batch, bool x_to_y) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    check_square(*batch[0]);
    int S = batch[0]->x.h;
    int B = int(batch.size());
    Tensor in(B, 1, S, S), target(B, 1, S, S);
    for (int i = 0; i < B; ++i) {
        const data::SlicePair& p = *batch[size_t(i)];
        copy_row(in, i, x_to_y ? p.x : p.y);
        copy_row(target, i, x_to_y ? p.y : p.x);
    }
    Tensor pred = net.forward(in, {}, true);
    Tensor dpred;
    double loss = checked(nn::l2_norm_loss(pred, target, &dpred), "translator");
    net.zero_grad();
    net.backward(dpred);
    opt.step(net.params());
    return loss;
}

double train_step_autoencoder(nn::Autoencoder& net, nn::Adam& opt, const Batch& batch,
                              double noise_sigma, double kl_weight, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    check_square(*batch[0]);
    int S = batch[0]->x.h;
    int B = int(batch.size());
    Tensor clean(B, 1, S, S);
    for (int i = 0; i < B; ++i) copy_row(clean, i, batch[size_t(i)]->x);

    Tensor in = clean;
    if (noise_sigma > 0.0)
        for (auto& v : in.v) v += float(noise_sigma * rng.normal());

    bool vae = net.cfg.variant == nn::AeVariant::vae;
    auto out = net.forward(in, vae ? &rng : nullptr, true);
    Tensor drecon;
    double recon = nn::l2_norm_loss(out.recon, clean, &drecon);
    double loss = checked(recon + (vae ? kl_weight * out.kl : 0.0), "autoencoder");
    net.zero_grad();
    net.backward(drecon, vae ? kl_weight : 0.0);
    opt.step(net.params());
    return loss;
}

double train_step_ddpm_uncond(nn::UNet& net, nn::Adam& opt, const Batch& batch,
                              const diffusion::NoiseSchedule& s, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    check_square(*batch[0]);
    int S = batch[0]->x.h;
    int B = int(batch.size());
    Tensor x_t(B, 1, S, S), x0(B, 1, S, S);
    std::vector<int> ts(size_t(B), 0);
    for (int i = 0; i < B; ++i) {
        const data::SlicePair& p = *batch[size_t(i)];
        int t = rng.uniform_int(1, s.T);
        Tensor eps = normal_like(p.x, rng);
        copy_row(x_t, i, diffusion::marginal_sample(p.x, t, eps, s));
        copy_row(x0, i, p.x);
        ts[size_t(i)] = t;
    }
    Tensor pred = net.forward(x_t, ts, true);
    Tensor dpred;
    double loss = checked(nn::l2_norm_loss(pred, x0, &dpred), "ddpm");
    net.zero_grad();
    net.backward(dpred);
    opt.step(net.params());
    return loss;
}

TrainOutcome run_training(const config::ExperimentConfig& cfg,
                          const std::vector<data::SlicePair>& train_slices,
                          const std::vector<data::SlicePair>& val_slices, bool resume) {
    if (train_slices.empty()) throw std::invalid_argument("no training slices");
    int S = input_size(cfg);
    for (const auto& p : train_slices) {
        check_square(p);
        if (p.x.h != S)
            throw std::invalid_argument("training slices are " + std::to_string(p.x.h) +
                                        "px, config expects " + std::to_string(S));
        if (p.anomaly_gt.count() != 0)
            throw std::logic_error(p.subject_id + ": anomalous slice in the training set");
    }
    fs::create_directories(cfg.output_dir);

    diffusion::NoiseSchedule sched;
    json sched_json;
    if (config::method_uses_diffusion(cfg.method)) {
        sched = diffusion::make_linear_schedule(cfg.schedule.T, cfg.schedule.beta_start,
                                                cfg.schedule.beta_end);
        sched_json = schedule_json(sched);
    }

    TrainOutcome out;
    bool abs_err = cfg.error_map == "abs";

    auto unet_handle = [&](const std::string& name, nn::UNet& net, json sched_j,
                           std::function<double(const Batch&, Rng&, nn::Adam&)> step) {
        ModelHandle h;
        h.name = name;
        h.kind = "unet";
        h.config_json = unet_config_json(net.cfg);
        h.schedule = std::move(sched_j);
        h.init = [&net](Rng& r) { net.init(r); };
        h.params = [&net] { return net.params(); };
        h.step = std::move(step);
        return h;
    };

    // Mean per-slice val Dice after threshold selection, the selection metric
    // for swept hyperparameters.
    auto val_dice = [&](const std::vector<Tensor>& scores) {
        return eval::select_threshold(scores, collect_gts(val_slices)).mean_dice;
    };

    if (cfg.method == "mmccd") {
        nn::UNet f(denoiser_config(cfg));
        ModelHandle hf =
            unet_handle("denoiser", f, sched_json, [&](const Batch& b, Rng& r, nn::Adam& opt) {
                return train_step_mmccd(f, opt, b, sched, cfg.mask, r);
            });
        out.steps_run += train_model(cfg, hf, train_slices, resume, &out.checkpoints);

        nn::UNet g(translator_config(cfg));
        ModelHandle hg =
            unet_handle("translator", g, json(), [&](const Batch& b, Rng&, nn::Adam& opt) {
                return train_step_translation(g, opt, b, false);
            });
        out.steps_run += train_model(cfg, hg, train_slices, resume, &out.checkpoints);
    } else if (cfg.method == "cyclic_unet") {
        nn::UNet f(translator_config(cfg));
        ModelHandle hf =
            unet_handle("forward", f, json(), [&](const Batch& b, Rng&, nn::Adam& opt) {
                return train_step_translation(f, opt, b, true);
            });
        out.steps_run += train_model(cfg, hf, train_slices, resume, &out.checkpoints);

        nn::UNet g(translator_config(cfg));
        ModelHandle hg =
            unet_handle("backward", g, json(), [&](const Batch& b, Rng&, nn::Adam& opt) {
                return train_step_translation(g, opt, b, false);
            });
        out.steps_run += train_model(cfg, hg, train_slices, resume, &out.checkpoints);
    } else if (cfg.method == "ae" || cfg.method == "vae" || cfg.method == "dae") {
        std::vector<double> sigmas =
            cfg.method == "dae" ? cfg.baseline.dae_sigmas : std::vector<double>{0.0};
        bool sweep = sigmas.size() > 1;
        if (sweep && val_slices.empty())
            throw ConfigError("dae sigma sweep needs a validation split");

        Tensor val_x;
        if (sweep) val_x = stack_modality_x(val_slices);
        double best_dice = -1.0;
        size_t best_idx = 0;
        std::vector<std::string> candidate_files;
        for (size_t si = 0; si < sigmas.size(); ++si) {
            nn::Autoencoder net(autoencoder_config(cfg, sigmas[si]));
            std::string name = sweep ? "model_s" + std::to_string(si) : "model";
            ModelHandle h;
            h.name = name;
            h.kind = "autoencoder";
            h.config_json = ae_config_json(net.cfg);
            h.init = [&net](Rng& r) { net.init(r); };
            h.params = [&net] { return net.params(); };
            double sigma = cfg.method == "dae" ? sigmas[si] : 0.0;
            h.step = [&, sigma](const Batch& b, Rng& r, nn::Adam& opt) {
                return train_step_autoencoder(net, opt, b, sigma, cfg.baseline.kl_weight, r);
            };
            out.steps_run += train_model(cfg, h, train_slices, resume, &candidate_files);
            if (sweep) {
                double d = val_dice(
                    reconstruction_scores(reconstruct_autoencoder(net, val_x), val_x, abs_err));
                if (d > best_dice) {
                    best_dice = d;
                    best_idx = si;
                }
            }
        }
        fs::path final_path = fs::path(cfg.output_dir) / "model.ckpt";
        if (sweep)
            fs::copy_file(candidate_files[best_idx], final_path,
                          fs::copy_options::overwrite_existing);
        out.checkpoints.push_back(final_path.string());
    } else if (cfg.method == "ddpm_uncond") {
        nn::UNet net(uncond_config(cfg));
        ModelHandle h =
            unet_handle("model", net, sched_json, [&](const Batch& b, Rng& r, nn::Adam& opt) {
                return train_step_ddpm_uncond(net, opt, b, sched, r);
            });
        out.steps_run += train_model(cfg, h, train_slices, resume, &out.checkpoints);

        // Noise level for inference, picked on validation.
        int t_best = std::max(1, sched.T / 2);
        if (!val_slices.empty()) {
            Tensor val_x = stack_modality_x(val_slices);
            Tensor eps = uncond_noise_batch(cfg.seed, val_slices);
            double best = -1.0;
            for (int frac = 1; frac <= 3; ++frac) {
                int t_cand = std::max(1, sched.T * frac / 4);
                double d = val_dice(reconstruction_scores(
                    reconstruct_ddpm_uncond(net, val_x, t_cand, sched, eps), val_x, abs_err));
                if (d > best) {
                    best = d;
                    t_best = t_cand;
                }
            }
        }
        fs::path path = fs::path(cfg.output_dir) / "model.ckpt";
        nn::Checkpoint ck = nn::load_checkpoint(path.string());
        ck.config["t_test"] = t_best;
        nn::save_checkpoint(path.string(), ck);
    } else {
        throw ConfigError("unknown method: " + cfg.method);
    }
    return out;
}

}  // namespace mmccd::pipelines
