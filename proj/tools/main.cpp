// Experiment driver: generate-data, train, infer, evaluate, run-all.
// Exit codes: 0 success, 1 runtime failure, 2 config/usage error.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmccd/config/config.hpp"
#include "mmccd/core/errors.hpp"
#include "mmccd/core/npy.hpp"
#include "mmccd/data/dataset.hpp"
#include "mmccd/data/normalize.hpp"
#include "mmccd/data/phantom.hpp"
#include "mmccd/data/slices.hpp"
#include "mmccd/eval/metrics.hpp"
#include "mmccd/eval/threshold.hpp"
#include "mmccd/pipelines/infer.hpp"
#include "mmccd/pipelines/train.hpp"

using namespace mmccd;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string hex64(uint64_t v) {
    char b[17];
    std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
    return b;
}

// Flag overrides; anything unset falls through to the config file / defaults.
struct Overrides {
    std::string config_file;
    std::optional<std::string> method, modality_x, modality_y, data_source, brats_dir, error_map,
        output_dir, schedule_kind, sampler, reverse_noise;
    std::optional<int> image_size, workers, T, mask_extent, mask_stride, batch_size, max_steps,
        checkpoint_every, ddim_steps, n_train, n_val, n_test, phantom_size, model_width,
        model_depth;
    std::optional<double> beta_start, beta_end, learning_rate, phantom_noise;
    std::optional<uint64_t> seed;
};

void add_common(CLI::App* c, Overrides& o) {
    c->add_option("--config", o.config_file, "experiment config file (json)");
    c->add_option("--method", o.method, "mmccd|cyclic_unet|ae|vae|dae|ddpm_uncond");
    c->add_option("--modality-x", o.modality_x, "input modality");
    c->add_option("--modality-y", o.modality_y, "translated modality");
    c->add_option("--data-source", o.data_source, "phantom|brats_dir");
    c->add_option("--brats-dir", o.brats_dir, "BraTS-layout subject root");
    c->add_option("--error-map", o.error_map, "squared|abs");
    c->add_option("--image-size", o.image_size, "resample target for volume data");
    c->add_option("--seed", o.seed, "experiment seed");
    c->add_option("--workers", o.workers, "worker threads for inference");
    c->add_option("--output-dir", o.output_dir, "experiment directory");
    c->add_option("--schedule-kind", o.schedule_kind, "noise schedule kind");
    c->add_option("--T", o.T, "diffusion steps");
    c->add_option("--beta-start", o.beta_start, "schedule beta at t=1");
    c->add_option("--beta-end", o.beta_end, "schedule beta at t=T");
    c->add_option("--mask-extent", o.mask_extent, "strip width in pixels");
    c->add_option("--mask-stride", o.mask_stride, "strip offset step");
    c->add_option("--learning-rate", o.learning_rate, "adam learning rate");
    c->add_option("--batch-size", o.batch_size, "training batch size");
    c->add_option("--max-steps", o.max_steps, "optimizer steps to reach");
    c->add_option("--checkpoint-every", o.checkpoint_every, "periodic checkpoint interval");
    c->add_option("--sampler", o.sampler, "ddim|ddpm");
    c->add_option("--ddim-steps", o.ddim_steps, "ddim step count (0 -> T/10)");
    c->add_option("--reverse-noise", o.reverse_noise, "posterior|alg_literal");
    c->add_option("--n-train", o.n_train, "phantom training slices");
    c->add_option("--n-val", o.n_val, "phantom validation slices");
    c->add_option("--n-test", o.n_test, "phantom test slices");
    c->add_option("--phantom-size", o.phantom_size, "phantom side length");
    c->add_option("--phantom-noise", o.phantom_noise, "phantom acquisition noise sigma");
    c->add_option("--model-width", o.model_width, "unet base width");
    c->add_option("--model-depth", o.model_depth, "unet depth");
}

int env_workers() {
    const char* w = std::getenv("MMCCD_WORKERS");
    if (!w || !*w) return 0;
    char* end = nullptr;
    long v = std::strtol(w, &end, 10);
    if (*end || v <= 0) throw ConfigError("MMCCD_WORKERS must be a positive integer");
    return static_cast<int>(v);
}

// Precedence: defaults < config file < env < flags; MMCCD_OUTPUT_ROOT then
// prefixes whatever relative output_dir survived, so tests can redirect whole
// experiments without touching configs.
config::ExperimentConfig resolve(const Overrides& o) {
    config::ExperimentConfig cfg;
    if (!o.config_file.empty()) cfg = config::load_config_file(o.config_file);
    if (int w = env_workers()) cfg.workers = w;

    auto set = [](auto& field, const auto& opt) {
        if (opt) field = *opt;
    };
    set(cfg.method, o.method);
    set(cfg.modality_x, o.modality_x);
    set(cfg.modality_y, o.modality_y);
    set(cfg.data_source, o.data_source);
    set(cfg.brats_dir, o.brats_dir);
    set(cfg.error_map, o.error_map);
    set(cfg.image_size, o.image_size);
    set(cfg.seed, o.seed);
    set(cfg.workers, o.workers);
    set(cfg.output_dir, o.output_dir);
    set(cfg.schedule.kind, o.schedule_kind);
    set(cfg.schedule.T, o.T);
    set(cfg.schedule.beta_start, o.beta_start);
    set(cfg.schedule.beta_end, o.beta_end);
    set(cfg.mask.extent, o.mask_extent);
    set(cfg.mask.stride, o.mask_stride);
    set(cfg.train.learning_rate, o.learning_rate);
    set(cfg.train.batch_size, o.batch_size);
    set(cfg.train.max_steps, o.max_steps);
    set(cfg.train.checkpoint_every, o.checkpoint_every);
    set(cfg.sampler.kind, o.sampler);
    set(cfg.sampler.ddim_steps, o.ddim_steps);
    set(cfg.sampler.reverse_noise, o.reverse_noise);
    set(cfg.phantom.n_train, o.n_train);
    set(cfg.phantom.n_val, o.n_val);
    set(cfg.phantom.n_test, o.n_test);
    set(cfg.phantom.image_size, o.phantom_size);
    set(cfg.phantom.noise_sigma, o.phantom_noise);
    set(cfg.model.base_width, o.model_width);
    set(cfg.model.depth, o.model_depth);

    if (const char* root = std::getenv("MMCCD_OUTPUT_ROOT"))
        if (*root && fs::path(cfg.output_dir).is_relative())
            cfg.output_dir = (fs::path(root) / cfg.output_dir).string();

    config::validate_config(cfg);
    return cfg;
}

// Every command drops its fully resolved config next to its outputs before
// doing any work, so a result directory is self-describing.
void echo_config(const config::ExperimentConfig& cfg, const std::string& cmd) {
    fs::create_directories(cfg.output_dir);
    std::ofstream f(fs::path(cfg.output_dir) / ("config_" + cmd + ".json"));
    f << config::config_to_json(cfg).dump(2) << "\n";
}

data::PhantomSpec phantom_spec(const config::ExperimentConfig& cfg) {
    data::PhantomSpec spec = data::default_phantom_spec();
    spec.image_size = cfg.phantom.image_size;
    spec.noise_sigma = cfg.phantom.noise_sigma;
    spec.seed = cfg.seed;
    return spec;
}

int phantom_count(const config::ExperimentConfig& cfg, data::Split split) {
    switch (split) {
        case data::Split::train: return cfg.phantom.n_train;
        case data::Split::val: return cfg.phantom.n_val;
        default: return cfg.phantom.n_test;
    }
}

std::vector<data::SlicePair> phantom_split(const config::ExperimentConfig& cfg,
                                           data::Split split) {
    return data::generate_phantom(phantom_spec(cfg), phantom_count(cfg, split), split);
}

fs::path dataset_dir(const config::ExperimentConfig& cfg) {
    return fs::path(cfg.output_dir) / "dataset";
}

// Written dataset wins; a phantom source can also materialize on the fly
// (deterministic, so either path yields the same slices).
std::vector<data::SlicePair> load_split(const config::ExperimentConfig& cfg, data::Split split) {
    fs::path ds = dataset_dir(cfg);
    if (fs::exists(ds / "manifest.jsonl")) return data::load_dataset(ds.string(), split);
    if (cfg.data_source == "phantom") return phantom_split(cfg, split);
    throw ConfigError("no dataset under " + ds.string() + "; run generate-data first");
}

data::Volume load_brats_volume(const fs::path& subject_dir, const std::string& id,
                               const std::string& suffix) {
    for (const char* ext : {".nii.gz", ".nii"}) {
        fs::path p = subject_dir / (id + "_" + suffix + ext);
        if (fs::exists(p)) return data::load_nifti(p.string());
    }
    throw ConfigError("missing " + (subject_dir / (id + "_" + suffix + ".nii[.gz]")).string());
}

std::vector<data::SlicePair> ingest_brats(const config::ExperimentConfig& cfg) {
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(cfg.brats_dir))
        if (e.is_directory()) ids.push_back(e.path().filename().string());
    if (ids.empty())
        throw ConfigError("brats_dir " + cfg.brats_dir +
                          " has no subject directories (expected "
                          "<dir>/<subject>/<subject>_<modality>.nii[.gz] plus <subject>_seg)");
    data::SplitAssignment split = data::split_subjects(ids, cfg.seed);

    std::vector<data::SlicePair> out;
    auto ingest = [&](const std::vector<std::string>& subjects, data::Split s) {
        for (const std::string& id : subjects) {
            fs::path subject_dir = fs::path(cfg.brats_dir) / id;
            data::SubjectVolumes sv;
            sv.id = id;
            sv.x = load_brats_volume(subject_dir, id, cfg.modality_x);
            sv.y = config::method_translates(cfg.method)
                       ? load_brats_volume(subject_dir, id, cfg.modality_y)
                       : sv.x;
            sv.seg = load_brats_volume(subject_dir, id, "seg");
            data::normalize_volume(sv.x, data::modality_from_name(cfg.modality_x));
            if (config::method_translates(cfg.method))
                data::normalize_volume(sv.y, data::modality_from_name(cfg.modality_y));
            auto slices = data::extract_slices(sv, s, cfg.image_size, &std::cerr);
            out.insert(out.end(), slices.begin(), slices.end());
        }
    };
    ingest(split.train, data::Split::train);
    ingest(split.val, data::Split::val);
    ingest(split.test, data::Split::test);
    return out;
}

void cmd_generate_data(const config::ExperimentConfig& cfg) {
    echo_config(cfg, "generate_data");
    std::vector<data::SlicePair> all;
    if (cfg.data_source == "phantom") {
        for (data::Split s : {data::Split::train, data::Split::val, data::Split::test}) {
            auto part = phantom_split(cfg, s);
            all.insert(all.end(), part.begin(), part.end());
        }
    } else {
        all = ingest_brats(cfg);
    }
    fs::path ds = dataset_dir(cfg);
    data::write_dataset(ds.string(), all, config::config_to_json(cfg).dump(2));
    std::cout << "dataset: " << all.size() << " slices -> " << ds.string() << " (digest "
              << hex64(data::dataset_digest(all)) << ")\n";
}

std::vector<std::string> method_model_names(const std::string& method) {
    if (method == "mmccd") return {"denoiser", "translator"};
    if (method == "cyclic_unet") return {"forward", "backward"};
    return {"model"};
}

void cmd_train(const config::ExperimentConfig& cfg, bool resume) {
    echo_config(cfg, "train");
    if (!resume)
        for (const std::string& name : method_model_names(cfg.method)) {
            fs::path ck = fs::path(cfg.output_dir) / (name + ".ckpt");
            if (fs::exists(ck))
                throw ConfigError(ck.string() + " already exists; pass --resume to continue");
        }
    auto train_slices = load_split(cfg, data::Split::train);
    auto val_slices = load_split(cfg, data::Split::val);
    pipelines::TrainOutcome out = pipelines::run_training(cfg, train_slices, val_slices, resume);
    std::cout << "train[" << cfg.method << "]: " << out.steps_run << " steps\n";
    for (const std::string& ck : out.checkpoints) std::cout << "  " << ck << "\n";
}

void cmd_infer(const config::ExperimentConfig& cfg, const std::vector<data::Split>& splits) {
    echo_config(cfg, "infer");
    for (data::Split split : splits) {
        auto slices = load_split(cfg, split);
        auto scores = pipelines::run_inference(cfg, slices);
        fs::path dir = fs::path(cfg.output_dir) / "scores" / data::split_name(split);
        fs::create_directories(dir);
        std::ofstream manifest(dir / "manifest.jsonl");
        for (const auto& s : scores) {
            std::string file = s.subject_id + "_" + std::to_string(s.slice_index) + ".npy";
            save_npy((dir / file).string(), s.score.data(), s.score.h, s.score.w);
            json row = {{"subject_id", s.subject_id},
                        {"slice_index", s.slice_index},
                        {"split", data::split_name(s.split)},
                        {"file", file},
                        {"uncovered_pixels", s.uncovered_pixels},
                        {"collapsed_model", s.collapsed_model}};
            manifest << row.dump() << "\n";
        }
        uint64_t digest = pipelines::scores_digest(scores);
        std::ofstream summary(dir / "summary.json");
        summary << json{{"split", data::split_name(split)},
                        {"n_slices", scores.size()},
                        {"digest", hex64(digest)}}
                       .dump(2)
                << "\n";
        std::cout << "infer[" << data::split_name(split) << "]: " << scores.size()
                  << " maps, digest " << hex64(digest) << "\n";
    }
}

struct LoadedScores {
    std::vector<Tensor> maps;
    std::vector<BoolImage> gts;
};

// Score maps from an infer run joined with their ground truth, manifest order.
LoadedScores load_scores(const config::ExperimentConfig& cfg, data::Split split) {
    fs::path dir = fs::path(cfg.output_dir) / "scores" / data::split_name(split);
    std::ifstream manifest(dir / "manifest.jsonl");
    if (!manifest)
        throw ConfigError("no score manifest under " + dir.string() + "; run infer first");

    std::map<std::pair<std::string, int>, const data::SlicePair*> by_key;
    auto slices = load_split(cfg, split);
    for (const auto& s : slices) by_key[{s.subject_id, s.slice_index}] = &s;

    LoadedScores out;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        json row = json::parse(line);
        std::string subject = row.at("subject_id").get<std::string>();
        int index = row.at("slice_index").get<int>();
        auto it = by_key.find({subject, index});
        if (it == by_key.end())
            throw std::runtime_error("score manifest row " + subject + "/" +
                                     std::to_string(index) + " has no dataset slice");
        out.maps.push_back(load_npy_f32((dir / row.at("file").get<std::string>()).string()));
        out.gts.push_back(it->second->anomaly_gt);
    }
    if (out.maps.empty()) throw std::runtime_error("empty score manifest in " + dir.string());
    return out;
}

void cmd_evaluate(const config::ExperimentConfig& cfg, data::Split split,
                  const std::string& threshold_source, std::optional<double> fixed_threshold) {
    echo_config(cfg, "evaluate");
    double h;
    if (threshold_source == "fixed") {
        if (!fixed_threshold) throw ConfigError("--threshold is required with fixed thresholds");
        h = *fixed_threshold;
    } else if (threshold_source == "from_validation") {
        LoadedScores val = load_scores(cfg, data::Split::val);
        eval::ThresholdChoice choice = eval::select_threshold(val.maps, val.gts);
        h = choice.h;
        std::cout << "threshold " << h << " (validation mean dice " << choice.mean_dice << ")\n";
    } else {
        throw ConfigError("threshold source must be fixed or from_validation, got " +
                          threshold_source);
    }

    LoadedScores target = load_scores(cfg, split);
    eval::MetricsReport report =
        eval::evaluate_slices(target.maps, target.gts, h, config::config_to_json(cfg).dump(2));
    fs::path out = fs::path(cfg.output_dir) / ("report_" + std::string(data::split_name(split)) +
                                               ".json");
    std::ofstream f(out);
    f << eval::report_to_json(report) << "\n";
    std::cout << eval::format_report_table({{cfg.method, report}});
    std::cout << "report -> " << out.string() << "\n";
}

data::Split split_from_flag(const std::string& name) {
    if (name == "train") return data::Split::train;
    if (name == "val") return data::Split::val;
    if (name == "test") return data::Split::test;
    throw ConfigError("unknown split " + name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cyclic modality translation anomaly segmentation"};
    app.require_subcommand(1);

    Overrides o_gen, o_train, o_infer, o_eval, o_all;
    bool resume_train = false, resume_all = false;
    std::string infer_split = "all", eval_split = "test";
    std::string eval_source = "from_validation", all_source = "from_validation";
    std::optional<double> eval_threshold, all_threshold;

    CLI::App* c_gen = app.add_subcommand("generate-data", "materialize the dataset directory");
    add_common(c_gen, o_gen);

    CLI::App* c_train = app.add_subcommand("train", "train the configured method");
    add_common(c_train, o_train);
    c_train->add_flag("--resume", resume_train, "continue from existing checkpoints");

    CLI::App* c_infer = app.add_subcommand("infer", "score slices with trained checkpoints");
    add_common(c_infer, o_infer);
    c_infer->add_option("--split", infer_split, "val|test|all (default all)");

    CLI::App* c_eval = app.add_subcommand("evaluate", "select threshold and report metrics");
    add_common(c_eval, o_eval);
    c_eval->add_option("--split", eval_split, "val|test (default test)");
    c_eval->add_option("--threshold-source", eval_source, "from_validation|fixed");
    c_eval->add_option("--threshold", eval_threshold, "threshold for --threshold-source fixed");

    CLI::App* c_all = app.add_subcommand("run-all", "generate-data, train, infer, evaluate");
    add_common(c_all, o_all);
    c_all->add_flag("--resume", resume_all, "continue from existing checkpoints");
    c_all->add_option("--threshold-source", all_source, "from_validation|fixed");
    c_all->add_option("--threshold", all_threshold, "threshold for --threshold-source fixed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_gen->parsed()) {
            cmd_generate_data(resolve(o_gen));
        } else if (c_train->parsed()) {
            cmd_train(resolve(o_train), resume_train);
        } else if (c_infer->parsed()) {
            std::vector<data::Split> splits;
            if (infer_split == "all")
                splits = {data::Split::val, data::Split::test};
            else
                splits = {split_from_flag(infer_split)};
            cmd_infer(resolve(o_infer), splits);
        } else if (c_eval->parsed()) {
            cmd_evaluate(resolve(o_eval), split_from_flag(eval_split), eval_source,
                         eval_threshold);
        } else if (c_all->parsed()) {
            config::ExperimentConfig cfg = resolve(o_all);
            cmd_generate_data(cfg);
            cmd_train(cfg, resume_all);
            cmd_infer(cfg, {data::Split::val, data::Split::test});
            cmd_evaluate(cfg, data::Split::test, all_source, all_threshold);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
