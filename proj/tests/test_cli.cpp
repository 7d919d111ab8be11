// End-to-end tests of the command-line binary (path injected by CMake).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stegattn/checkpoint.hpp"
#include "stegattn/dataset.hpp"
#include "stegattn/metrics.hpp"

using namespace stegattn;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string out, err;
};

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               ("stegattn_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunResult run_cli(const TempDir& scratch, const std::string& args) {
    const std::string out = scratch.file("_stdout"), err = scratch.file("_stderr");
    std::string cmd = std::string(STEGATTN_CLI_PATH) + " " + args + " >" + out +
                      " 2>" + err;
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
}

void write_random_pngs(const TempDir& dir, int count, int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < count; ++i) {
        auto img = oracle::random_tensor<float>(1, 3, size, size, rng, 0.0f, 1.0f);
        char name[32];
        std::snprintf(name, sizeof(name), "img_%03d.png", i);
        save_image(dir.file(name), img);
    }
}

}  // namespace

TEST_CASE("train writes a checkpoint and loss log; reruns are byte-identical") {
    TempDir dir("train");
    write_random_pngs(dir, 8, 16, 50);
    const std::string base = "train --data " + dir.path.string() +
                             " --mode baseline --seed 3 --steps 3 --image-size 16 "
                             "--batch 2 --out ";
    auto r1 = run_cli(dir, base + dir.file("a.stg"));
    CHECK(r1.exit_code == 0);
    CHECK(fs::exists(dir.file("a.stg")));
    CHECK(fs::exists(dir.file("a.stg.loss.csv")));
    CHECK(read_file(dir.file("a.stg.loss.csv")).substr(0, 10) == "step,loss\n");

    auto r2 = run_cli(dir, base + dir.file("b.stg"));
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir.file("a.stg")) == read_file(dir.file("b.stg")));
    CHECK(read_file(dir.file("a.stg.loss.csv")) == read_file(dir.file("b.stg.loss.csv")));
}

TEST_CASE("unknown mode exits 1 and lists the valid tokens") {
    TempDir dir("badmode");
    auto r = run_cli(dir, "train --data " + dir.path.string() +
                              " --mode bogus --out " + dir.file("x.stg"));
    CHECK(r.exit_code == 1);
    for (const char* tok : {"baseline", "channel", "spatial", "channel-then-spatial",
                            "spatial-then-channel", "channel-spatial-parallel"})
        CHECK(r.err.find(tok) != std::string::npos);
}

TEST_CASE("missing dataset exits 2; missing required flag exits 1") {
    TempDir dir("errors");
    auto r = run_cli(dir, "train --data " + dir.file("nowhere") +
                              " --mode baseline --out " + dir.file("x.stg"));
    CHECK(r.exit_code == 2);
    auto r2 = run_cli(dir, "train --mode baseline --out " + dir.file("x.stg"));
    CHECK(r2.exit_code == 1);
    auto r3 = run_cli(dir, "hide --checkpoint " + dir.file("nothere.stg") +
                               " --cover a.png --secret b.png --out " + dir.file("s.png"));
    CHECK(r3.exit_code == 2);
}

TEST_CASE("hide/reveal round trip with quantization bound") {
    TempDir dir("hr");
    write_random_pngs(dir, 6, 16, 60);
    auto tr = run_cli(dir, "train --data " + dir.path.string() +
                               " --mode channel-spatial-parallel --seed 4 --steps 2 "
                               "--image-size 16 --batch 2 --out " +
                               dir.file("m.stg"));
    REQUIRE(tr.exit_code == 0);

    auto h = run_cli(dir, "hide --checkpoint " + dir.file("m.stg") + " --cover " +
                              dir.file("img_000.png") + " --secret " +
                              dir.file("img_001.png") + " --out " + dir.file("stego.png"));
    CHECK(h.exit_code == 0);
    CHECK(h.out.find("psnr_cover=") != std::string::npos);
    CHECK(h.out.find("ssim_cover=") != std::string::npos);

    auto stego_png = load_image(dir.file("stego.png"), 0);
    CHECK(stego_png.h == 16);
    CHECK(stego_png.w == 16);

    // The written PNG differs from the float-path stego image only by the
    // 8-bit rounding: at most half a quantization level per pixel.
    auto [params, cfg] = load_checkpoint(dir.file("m.stg"));
    auto cover = load_image(dir.file("img_000.png"), cfg.image_size);
    auto secret = load_image(dir.file("img_001.png"), cfg.image_size);
    auto mv = ModelVars<float>::from(params);
    auto stego_float =
        hide_forward(make_constant(cover), prep_forward(make_constant(secret), mv), mv);
    float worst = 0;
    for (std::size_t i = 0; i < stego_png.size(); ++i)
        worst = std::max(worst,
                         std::abs(stego_png.data[i] - stego_float->value.data[i]));
    CHECK(worst <= 0.5f / 255.0f + 1e-6f);

    auto rv = run_cli(dir, "reveal --checkpoint " + dir.file("m.stg") + " --stego " +
                               dir.file("stego.png") + " --secret " +
                               dir.file("img_001.png") + " --out " + dir.file("rec.png"));
    CHECK(rv.exit_code == 0);
    CHECK(rv.out.find("psnr_secret=") != std::string::npos);
    CHECK(rv.out.find("inf") == std::string::npos);  // finite metrics
    auto rec = load_image(dir.file("rec.png"), 0);
    CHECK(rec.h == 16);
    CHECK(rec.w == 16);

    // Determinism: repeating hide produces the identical PNG.
    auto h2 = run_cli(dir, "hide --checkpoint " + dir.file("m.stg") + " --cover " +
                               dir.file("img_000.png") + " --secret " +
                               dir.file("img_001.png") + " --out " + dir.file("stego2.png"));
    CHECK(h2.exit_code == 0);
    CHECK(read_file(dir.file("stego.png")) == read_file(dir.file("stego2.png")));
}

TEST_CASE("compare writes the six-row csv") {
    TempDir dir("cmp");
    write_random_pngs(dir, 6, 16, 70);
    auto r = run_cli(dir, "compare --data " + dir.path.string() +
                              " --seed 5 --steps 2 --image-size 16 --batch 2 --out " +
                              dir.file("table.csv"));
    CHECK(r.exit_code == 0);
    std::string csv = read_file(dir.file("table.csv"));
    CHECK(csv.substr(0, csv.find('\n')) == metrics_csv_header());
    CHECK(csv.find("\nBaseline,") != std::string::npos);
    CHECK(csv.find("\nChannel-Spatial Parallel,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(r.out.find("secret") != std::string::npos);  // trend note on stdout
}

TEST_CASE("gradcheck exits 0 on a correct build and 3 under an injected fault") {
    TempDir dir("gc");
    auto r = run_cli(dir, "gradcheck --seed 21");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("conv2d") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);

    auto bad = run_cli(dir, "gradcheck --seed 21 --corrupt-op relu");
    CHECK(bad.exit_code == 3);
    CHECK(bad.err.find("relu") != std::string::npos);
}
