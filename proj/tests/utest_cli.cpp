// Drives the installed binary end to end through std::system; everything here
// observes only the public surface: exit codes, stdout, and the files a
// command leaves behind.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

const char* kMicroFlags =
    " --phantom-size 16 --n-train 8 --n-val 4 --n-test 4 --T 10"
    " --mask-extent 4 --mask-stride 4 --max-steps 5 --batch-size 2"
    " --model-width 4 --model-depth 2 --ddim-steps 2";

fs::path scratch(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("mmccd_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunResult run_cli(const fs::path& root, const std::string& args, const std::string& env = "") {
    fs::path out = root / "cli_output.txt";
    std::string cmd = "MMCCD_OUTPUT_ROOT=" + root.string() + " " + env + " " + MMCCD_CLI_PATH +
                      " " + args + " > " + out.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(out);
    std::stringstream ss;
    ss << f.rdbuf();
    r.output = ss.str();
    return r;
}

// last "digest <hex>" token in the command output
std::string parse_digest(const std::string& output) {
    size_t pos = output.rfind("digest ");
    REQUIRE(pos != std::string::npos);
    std::istringstream in(output.substr(pos + 7));
    std::string hex;
    in >> hex;
    while (!hex.empty() && hex.back() == ')') hex.pop_back();
    return hex;
}

int count_lines(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(bool(f));
    int n = 0;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) ++n;
    return n;
}

std::string last_line(const fs::path& p) {
    std::ifstream f(p);
    std::string line, last;
    while (std::getline(f, line))
        if (!line.empty()) last = line;
    return last;
}

}  // namespace

TEST_CASE("exit codes: 0 success, 2 usage and config errors") {
    fs::path root = scratch("exit");
    CHECK(run_cli(root, "--help").exit_code == 0);
    CHECK(run_cli(root, "bogus-cmd").exit_code == 2);
    CHECK(run_cli(root, "train --method nope --output-dir a").exit_code == 2);
    CHECK(run_cli(root, "train --output-dir a --mask-extent -3").exit_code == 2);

    std::ofstream bad(root / "bad.json");
    bad << R"({"methodd": "mmccd"})";
    bad.close();
    RunResult r = run_cli(root, "generate-data --config " + (root / "bad.json").string() +
                                    " --output-dir a");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("methodd") != std::string::npos);

    // empty brats layout names the problem and exits 2
    fs::create_directories(root / "empty_brats");
    RunResult b = run_cli(root, "generate-data --data-source brats_dir --brats-dir " +
                                    (root / "empty_brats").string() + " --output-dir a");
    CHECK(b.exit_code == 2);
    CHECK(b.output.find("subject") != std::string::npos);
}

TEST_CASE("generate-data: idempotent digest, manifest accounts for every slice") {
    fs::path root = scratch("gen");
    std::string args = std::string("generate-data --output-dir exp") + kMicroFlags;
    RunResult a = run_cli(root, args);
    REQUIRE(a.exit_code == 0);
    RunResult b = run_cli(root, args);
    REQUIRE(b.exit_code == 0);
    CHECK(parse_digest(a.output) == parse_digest(b.output));

    CHECK(count_lines(root / "exp/dataset/manifest.jsonl") == 8 + 4 + 4);
    // different seed, different data
    RunResult c = run_cli(root, args + " --seed 9");
    REQUIRE(c.exit_code == 0);
    CHECK(parse_digest(a.output) != parse_digest(c.output));
}

TEST_CASE("resolved config is echoed before compute; flags beat the file") {
    fs::path root = scratch("echo");
    std::ofstream cfg(root / "exp.json");
    cfg << R"({"phantom": {"n_train": 4, "image_size": 16}, "seed": 3})";
    cfg.close();
    std::string args = "generate-data --config " + (root / "exp.json").string() +
                       " --output-dir exp --n-train 6 --n-val 2 --n-test 2";
    REQUIRE(run_cli(root, args).exit_code == 0);

    std::ifstream echoed(root / "exp/config_generate_data.json");
    REQUIRE(bool(echoed));
    json j = json::parse(echoed);
    CHECK(j.at("phantom").at("n_train").get<int>() == 6);  // flag wins
    CHECK(j.at("phantom").at("image_size").get<int>() == 16);
    CHECK(j.at("seed").get<uint64_t>() == 3);
    CHECK(count_lines(root / "exp/dataset/manifest.jsonl") == 6 + 2 + 2);
}

TEST_CASE("train: one loss line per step, deterministic rerun, resume contract") {
    fs::path root = scratch("train");
    std::string args = std::string("train --output-dir exp") + kMicroFlags;
    REQUIRE(run_cli(root, args).exit_code == 0);
    CHECK(count_lines(root / "exp/loss_denoiser.txt") == 5);
    CHECK(count_lines(root / "exp/loss_translator.txt") == 5);
    CHECK(fs::exists(root / "exp/denoiser.ckpt"));

    // an identically seeded run lands on the identical final loss
    std::string again = std::string("train --output-dir exp2") + kMicroFlags;
    REQUIRE(run_cli(root, again).exit_code == 0);
    CHECK(last_line(root / "exp/loss_denoiser.txt") ==
          last_line(root / "exp2/loss_denoiser.txt"));

    // refusing to clobber, resuming on request
    CHECK(run_cli(root, args).exit_code == 2);
    std::string resume = std::string("train --output-dir exp --resume") + kMicroFlags;
    RunResult r = run_cli(root, resume);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0 steps") != std::string::npos);  // already at max_steps
    std::string extend =
        " --phantom-size 16 --n-train 8 --n-val 4 --n-test 4 --T 10 --mask-extent 4"
        " --mask-stride 4 --max-steps 7 --batch-size 2 --model-width 4 --model-depth 2"
        " --ddim-steps 2";
    REQUIRE(run_cli(root, "train --output-dir exp --resume" + extend).exit_code == 0);
    CHECK(count_lines(root / "exp/loss_denoiser.txt") == 7);
}

TEST_CASE("train: max_steps 0 writes an initialized checkpoint and exits 0") {
    fs::path root = scratch("train0");
    std::string args =
        std::string("train --output-dir exp --max-steps 0 --phantom-size 16 --n-train 4"
                    " --n-val 2 --n-test 2 --T 10 --mask-extent 4 --mask-stride 4"
                    " --batch-size 2 --model-width 4 --model-depth 2");
    REQUIRE(run_cli(root, args).exit_code == 0);
    CHECK(fs::exists(root / "exp/denoiser.ckpt"));
    CHECK(fs::exists(root / "exp/translator.ckpt"));
}

TEST_CASE("infer: one map per slice, reproducible digests, worker-count invariant") {
    fs::path root = scratch("infer");
    std::string base = std::string(" --output-dir exp") + kMicroFlags;
    REQUIRE(run_cli(root, "generate-data" + base).exit_code == 0);
    REQUIRE(run_cli(root, "train" + base).exit_code == 0);

    RunResult a = run_cli(root, "infer" + base);
    REQUIRE(a.exit_code == 0);
    auto maps = [&](const char* split) {
        int n = 0;
        for (const auto& e : fs::directory_iterator(root / "exp/scores" / split))
            n += e.path().extension() == ".npy";
        return n;
    };
    CHECK(maps("val") == 4);
    CHECK(maps("test") == 4);
    CHECK(count_lines(root / "exp/scores/test/manifest.jsonl") == 4);

    std::ifstream summary(root / "exp/scores/test/summary.json");
    json s = json::parse(summary);
    std::string digest = s.at("digest").get<std::string>();
    CHECK(s.at("n_slices").get<int>() == 4);

    // bit-identical rerun, also under a different worker count (env override)
    RunResult b = run_cli(root, "infer" + base, "MMCCD_WORKERS=3");
    REQUIRE(b.exit_code == 0);
    std::ifstream summary2(root / "exp/scores/test/summary.json");
    CHECK(json::parse(summary2).at("digest").get<std::string>() == digest);
}

TEST_CASE("evaluate: thresholds from validation or fixed, report written") {
    fs::path root = scratch("eval");
    std::string base = std::string(" --output-dir exp") + kMicroFlags;
    REQUIRE(run_cli(root, "generate-data" + base).exit_code == 0);
    REQUIRE(run_cli(root, "train" + base).exit_code == 0);
    REQUIRE(run_cli(root, "infer" + base).exit_code == 0);

    RunResult v = run_cli(root, "evaluate" + base);
    REQUIRE(v.exit_code == 0);
    CHECK(v.output.find("DICE") != std::string::npos);
    CHECK(v.output.find("ASSD") != std::string::npos);
    REQUIRE(fs::exists(root / "exp/report_test.json"));
    std::ifstream rep(root / "exp/report_test.json");
    json j = json::parse(rep);
    CHECK(j.at("n_slices").get<int>() == 4);

    RunResult f = run_cli(root, "evaluate" + base + " --threshold-source fixed --threshold 0.5");
    CHECK(f.exit_code == 0);
    std::ifstream rep2(root / "exp/report_test.json");
    CHECK(json::parse(rep2).at("threshold").get<double>() == 0.5);

    CHECK(run_cli(root, "evaluate" + base + " --threshold-source fixed").exit_code == 2);
    CHECK(run_cli(root, "evaluate" + base + " --threshold-source sideways").exit_code == 2);
}

TEST_CASE("run-all chains the stages and reports on the test split") {
    fs::path root = scratch("all");
    RunResult r = run_cli(root, std::string("run-all --output-dir exp") + kMicroFlags);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("dataset:") != std::string::npos);
    CHECK(r.output.find("train[") != std::string::npos);
    CHECK(r.output.find("infer[val]") != std::string::npos);
    CHECK(r.output.find("infer[test]") != std::string::npos);
    CHECK(r.output.find("DICE") != std::string::npos);
    CHECK(fs::exists(root / "exp/report_test.json"));
    CHECK(fs::exists(root / "exp/config_run_all.json") == false);  // stages echo themselves
    CHECK(fs::exists(root / "exp/config_train.json"));
}
