#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.h"
#include "gmmsom/checkpoint.h"
#include "gmmsom/cli.h"
#include "gmmsom/artifacts.h"
#include "gmmsom/config.h"
#include "gmmsom/io.h"
#include "scenarios.h"

using namespace gmmsom;
using fixtures::TempDir;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "gmmsom");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// Writes the four-cluster benchmark as CSV and a matching config.
std::filesystem::path setup_run(const TempDir& dir, const std::string& extra = "") {
    save_csv(dir / "data.csv", scenarios::benchmark_data(60, 800).samples);
    std::ofstream cfg(dir / "run.cfg");
    cfg << "data = data.csv\n"
           "output_dir = out\n"
           "components = 4\n"
           "iterations = 400\n"
           "sigma0 = 1.0\n"
           "epsilon_inf = 0.001\n"
           "train_precisions = false\n"
           "history_every = 50\n"
        << extra;
    return dir / "run.cfg";
}

double value_after(const std::string& text, const std::string& key) {
    const auto pos = text.find(key + " ");
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + key.size() + 1));
}

}  // namespace

TEST_CASE("cli: train writes checkpoint, centroid grid and schedule") {
    TempDir dir;
    const auto cfg = setup_run(dir, "seed = 5\n");
    const Run r = run({"train", "--config", cfg.string()});
    CHECK_MESSAGE(r.code == kExitOk, r.err);
    CHECK(std::filesystem::exists(dir / "out/model.ckpt"));
    CHECK(std::filesystem::exists(dir / "out/centroids.pgm"));
    CHECK(std::filesystem::exists(dir / "out/schedule.csv"));
    CHECK(r.out.find("diagnosis healthy") != std::string::npos);
    const Checkpoint c = load_checkpoint(dir / "out/model.ckpt");
    CHECK(c.iteration == 400);
    CHECK(c.seed == 5);
}

TEST_CASE("cli: identical inputs give identical output bytes") {
    TempDir dir;
    const auto cfg = setup_run(dir).string();
    REQUIRE(run({"train", "--config", cfg, "--seed", "8"}).code == kExitOk);
    std::filesystem::rename(dir / "out", dir / "first");
    REQUIRE(run({"train", "--config", cfg, "--seed", "8"}).code == kExitOk);
    for (const char* f : {"model.ckpt", "schedule.csv", "centroids.pgm"}) {
        const bool same = fixtures::read_bytes(dir / "first" / f) == fixtures::read_bytes(dir / "out" / f);
        CHECK_MESSAGE(same, f);
    }
}

TEST_CASE("cli: resume continues to the same final checkpoint") {
    TempDir dir;
    const auto cfg = setup_run(dir, "seed = 3\n");
    REQUIRE(run({"train", "--config", cfg.string()}).code == kExitOk);
    const std::string full = fixtures::read_bytes(dir / "out/model.ckpt");

    const DataSet data = load_csv(dir / "data.csv");
    Trainer partial(load_run_config(cfg).train, data);
    for (int i = 0; i < 150; ++i) partial.step();
    save_checkpoint(dir / "half.ckpt", make_checkpoint(partial.config(), partial.state()));
    std::filesystem::remove_all(dir / "out");
    REQUIRE(run({"train", "--config", cfg.string(), "--resume", (dir / "half.ckpt").string()}).code == kExitOk);
    const Checkpoint resumed = load_checkpoint(dir / "out/model.ckpt");
    const Checkpoint reference = [&] {
        fixtures::write_bytes(dir / "full.ckpt", full);
        return load_checkpoint(dir / "full.ckpt");
    }();
    CHECK(resumed.model == reference.model);
    CHECK(resumed.rng_state == reference.rng_state);
}

TEST_CASE("cli: train without a seed is a usage error") {
    TempDir dir;
    const Run r = run({"train", "--config", setup_run(dir).string()});
    CHECK(r.code == kExitUsage);
    CHECK(!std::filesystem::exists(dir / "out/model.ckpt"));
}

TEST_CASE("cli: bad configuration and missing data") {
    TempDir dir;
    const auto cfg = setup_run(dir, "seed = 1\nwobble = 3\n");
    CHECK(run({"train", "--config", cfg.string()}).code == kExitUsage);
    std::filesystem::remove(dir / "data.csv");
    const auto cfg2 = setup_run(dir, "seed = 1\n");
    std::filesystem::remove(dir / "data.csv");
    CHECK(run({"train", "--config", cfg2.string()}).code == kExitData);
    CHECK(run({"train", "--config", (dir / "nope.cfg").string()}).code == kExitData);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
}

TEST_CASE("cli: numeric abort leaves a snapshot") {
    TempDir dir;
    fixtures::write_bytes(dir / "huge.csv", "1e300,0\n-1e300,1\n");
    fixtures::write_bytes(dir / "run.cfg",
                          "data = huge.csv\noutput_dir = out\ncomponents = 4\niterations = 10\n"
                          "seed = 1\ntrain_precisions = true\n");
    const Run r = run({"train", "--config", (dir / "run.cfg").string()});
    CHECK(r.code == kExitNumeric);
    CHECK(std::filesystem::exists(dir / "out/abort.ckpt"));
    CHECK(load_checkpoint(dir / "out/abort.ckpt").model.is_finite());
}

TEST_CASE("cli: sample, score, cluster and inspect") {
    TempDir dir;
    REQUIRE(run({"train", "--config", setup_run(dir, "seed = 2\n").string()}).code == kExitOk);
    const std::string model = (dir / "out/model.ckpt").string();

    CHECK(run({"sample", "--model", model, "-n", "0", "--seed", "1"}).code == kExitUsage);
    CHECK(run({"sample", "--model", model, "-n", "-3", "--seed", "1"}).code == kExitUsage);
    const Run s = run({"sample", "--model", model, "-n", "25", "--seed", "1"});
    CHECK(s.code == kExitOk);
    CHECK(std::count(s.out.begin(), s.out.end(), '\n') == 25);
    CHECK(run({"sample", "--model", model, "-n", "25", "--seed", "1"}).out == s.out);
    fixtures::write_bytes(dir / "samples.csv", s.out);

    const Run sc = run({"score", "--model", model, "--data", (dir / "samples.csv").string(), "--window", "5",
                        "--reference", (dir / "data.csv").string()});
    CHECK(sc.code == kExitOk);
    CHECK(sc.out.rfind("index,score,window_mean,outlier\n", 0) == 0);
    CHECK(std::count(sc.out.begin(), sc.out.end(), '\n') == 26);

    const Run cl = run({"cluster", "--model", model, "--data", (dir / "samples.csv").string()});
    CHECK(cl.code == kExitOk);
    CHECK(cl.out.rfind("index,cluster\n", 0) == 0);

    const Run in = run({"inspect", "--model", model});
    CHECK(in.code == kExitOk);
    CHECK(in.out.find("components 4") != std::string::npos);
    CHECK(in.out.find("iteration 400") != std::string::npos);

    CHECK(run({"inspect", "--model", (dir / "missing.ckpt").string()}).code == kExitData);
    CHECK(run({"score", "--model", model}).code == kExitUsage);
}

TEST_CASE("cli: verify-equivalence on tied and untied checkpoints") {
    TempDir dir;
    REQUIRE(run({"train", "--config", setup_run(dir, "seed = 4\ntied_spherical = true\n").string()}).code == kExitOk);
    const std::string model = (dir / "out/model.ckpt").string();
    const std::string data = (dir / "data.csv").string();
    const Run v = run({"verify-equivalence", "--model", model, "--data", data});
    CHECK(v.code == kExitOk);
    CHECK(value_after(v.out, "max_abs_err") <= 1e-10);
    const Run w = run({"verify-equivalence", "--model", model, "--data", data, "--sigma", "0.8"});
    CHECK(w.code == kExitOk);
    CHECK(value_after(w.out, "max_abs_err") <= 1e-10);

    TempDir untied;
    REQUIRE(run({"train", "--config", setup_run(untied, "seed = 4\n").string()}).code == kExitOk);
    CHECK(run({"verify-equivalence", "--model", (untied / "out/model.ckpt").string(), "--data", data}).code ==
          kExitData);
}

TEST_CASE("cli: digit configuration on a small IDX file") {
    TempDir dir;
    scenarios::write_digit_idx(dir / "digits.idx", 60, 7);
    std::ifstream in(std::filesystem::path(GMMSOM_SOURCE_DIR) / "configs/madbase.cfg");
    std::stringstream text;
    text << in.rdbuf();
    const std::string cfg = scenarios::override_config(
        text.str(), {{"data", (dir / "digits.idx").string()}, {"output_dir", (dir / "out").string()},
                     {"iterations", "600"}});
    fixtures::write_bytes(dir / "madbase.cfg", cfg);
    const Run r = run({"train", "--config", (dir / "madbase.cfg").string()});
    CHECK_MESSAGE(r.code == kExitOk, r.err);
    const GrayImage img = read_pgm(dir / "out/centroids.pgm");
    CHECK(img.width == 5 * 28 + 4);
    CHECK(img.height == 5 * 28 + 4);
}
