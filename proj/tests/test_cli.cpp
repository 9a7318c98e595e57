// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fgrn/checkpoint.hpp"
#include "fgrn/metrics.hpp"
#include "png_io.hpp"
#include "testutil.hpp"

using namespace fgrn;
namespace fs = std::filesystem;

#ifndef FGRN_CLI_PATH
#error "FGRN_CLI_PATH must be defined"
#endif

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("fgrn_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

RunResult run_cli(const TempDir& tmp, const std::string& args) {
    const auto out = tmp.path / "stdout.txt";
    const auto err = tmp.path / "stderr.txt";
    const std::string cmd = std::string(FGRN_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

void write_dataset(const TempDir& tmp, const std::string& sub, int count, int size, std::uint64_t seed) {
    fs::create_directories(tmp.path / sub);
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%s/img%02d.png", sub.c_str(), i);
        png_save(tmp.file(name), testutil::synth_image(size, size, seed + static_cast<std::uint64_t>(i)));
    }
}

void write_config(const std::string& path, const std::string& extra) {
    std::ofstream out(path);
    out << "scale=2\nwidth=8\nresblocks=2\nflow_cells=2\ndense_growth=4\n"
        << "batch_size=2\nhr_patch=32\nseed=3\n" << extra;
}

// checkpoint with an untrained (randomly initialized) tiny model
std::string make_untrained_ckpt(const TempDir& tmp, const std::string& name) {
    TrainConfig cfg;
    cfg.model.width = 8;
    cfg.model.resblocks = 2;
    cfg.model.flow_cells = 2;
    cfg.model.dense_growth = 4;
    cfg.batch_size = 2;
    cfg.hr_patch = 32;
    cfg.seed = 11;
    auto model = RescaleModelT<float>::create(cfg.model, cfg.seed);
    const auto path = tmp.file(name);
    checkpoint_save(model, nullptr, cfg, path);
    return path;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

} // namespace

TEST_SUITE("cli/errors") {

TEST_CASE("missing data dir fails with one error line") {
    TempDir tmp;
    auto r = run_cli(tmp, "train --data " + tmp.file("nope") + " --out " + tmp.file("m.fgrn"));
    CHECK(r.exit_code != 0);
    CHECK(r.err.rfind("error: ", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("unknown flags are rejected") {
    TempDir tmp;
    auto r = run_cli(tmp, "verify --bogus 3");
    CHECK(r.exit_code != 0);
    CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("bad config key fails with BadConfig") {
    TempDir tmp;
    write_dataset(tmp, "data", 1, 48, 21);
    std::ofstream(tmp.file("bad.cfg")) << "scale=2\nnot_a_key=1\n";
    auto r = run_cli(tmp, "train --config " + tmp.file("bad.cfg") + " --data " + tmp.file("data") +
                              " --out " + tmp.file("m.fgrn"));
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("BadConfig") != std::string::npos);
}

TEST_CASE("indivisible input fails with NotDivisible") {
    TempDir tmp;
    const auto ckpt = make_untrained_ckpt(tmp, "m.fgrn");
    png_save(tmp.file("odd.png"), testutil::synth_image(33, 34, 5));
    auto r = run_cli(tmp, "downscale --ckpt " + ckpt + " --in " + tmp.file("odd.png") + " --out " +
                              tmp.file("lr.png"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("NotDivisible") != std::string::npos);
}

TEST_CASE("corrupted checkpoint fails with CorruptFile") {
    TempDir tmp;
    const auto ckpt = make_untrained_ckpt(tmp, "m.fgrn");
    auto bytes = slurp(ckpt);
    std::ofstream(ckpt, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    auto r = run_cli(tmp, "verify --ckpt " + ckpt + " --trials 5");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("CorruptFile") != std::string::npos);
}

} // TEST_SUITE

TEST_SUITE("cli/pipeline") {

TEST_CASE("downscale and upscale shape contract on an untrained model") {
    TempDir tmp;
    const auto ckpt = make_untrained_ckpt(tmp, "m.fgrn");
    png_save(tmp.file("hr.png"), testutil::synth_image(64, 64, 31));
    auto r1 = run_cli(tmp, "downscale --ckpt " + ckpt + " --in " + tmp.file("hr.png") + " --out " +
                               tmp.file("lr.png"));
    REQUIRE(r1.exit_code == 0);
    auto lr = png_load(tmp.file("lr.png"));
    CHECK(lr.height == 32);
    CHECK(lr.width == 32);

    auto r2 = run_cli(tmp, "upscale --ckpt " + ckpt + " --in " + tmp.file("lr.png") + " --out " +
                               tmp.file("rec.png"));
    REQUIRE(r2.exit_code == 0);
    auto rec = png_load(tmp.file("rec.png"));
    CHECK(rec.height == 64);
    CHECK(rec.width == 64);
}

TEST_CASE("file round trip equals the in-process pipeline bit for bit") {
    TempDir tmp;
    const auto ckpt = make_untrained_ckpt(tmp, "m.fgrn");
    const auto hr_img = testutil::synth_image(64, 64, 37);
    png_save(tmp.file("hr.png"), hr_img);
    auto r1 = run_cli(tmp, "downscale --ckpt " + ckpt + " --in " + tmp.file("hr.png") + " --out " +
                               tmp.file("lr.png"));
    REQUIRE(r1.exit_code == 0);
    auto r2 = run_cli(tmp, "upscale --ckpt " + ckpt + " --in " + tmp.file("lr.png") + " --out " +
                               tmp.file("rec.png"));
    REQUIRE(r2.exit_code == 0);

    // in-process reference
    auto model = checkpoint_load(ckpt);
    auto hr_loaded = png_load(tmp.file("hr.png"));
    auto lr_t = model.downscale_lr(image_to_tensor<float>(hr_loaded));
    auto lr_img = tensor_to_image(lr_t);
    auto rec_t = model.upscale_hr(image_to_tensor<float>(lr_img));
    auto rec_img = tensor_to_image(rec_t);

    auto lr_file = png_load(tmp.file("lr.png"));
    CHECK(image_to_rgb8(lr_file) == image_to_rgb8(lr_img));
    auto rec_file = png_load(tmp.file("rec.png"));
    CHECK(image_to_rgb8(rec_file) == image_to_rgb8(rec_img));
}

TEST_CASE("roundtrip command runs on an untrained model") {
    TempDir tmp;
    const auto ckpt = make_untrained_ckpt(tmp, "m.fgrn");
    png_save(tmp.file("hr.png"), testutil::synth_image(32, 32, 41));
    auto r = run_cli(tmp, "roundtrip --ckpt " + ckpt + " --in " + tmp.file("hr.png") + " --out-lr " +
                              tmp.file("lr.png") + " --out-hr " + tmp.file("rec.png"));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("psnr_db=") != std::string::npos);
    CHECK(fs::exists(tmp.file("lr.png")));
    CHECK(fs::exists(tmp.file("rec.png")));
}

TEST_CASE("metrics command reports header and row") {
    TempDir tmp;
    png_save(tmp.file("a.png"), testutil::synth_image(32, 32, 43));
    png_save(tmp.file("b.png"), testutil::synth_image(32, 32, 44));
    auto r = run_cli(tmp, "metrics --ref " + tmp.file("a.png") + " --test " + tmp.file("b.png"));
    CHECK(r.exit_code == 0);
    auto lines = csv_lines(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "file,psnr_db,ssim");
    CHECK(lines[1].find(tmp.file("b.png")) == 0);
}

} // TEST_SUITE

TEST_SUITE("cli/eval") {

TEST_CASE("report has one row per image plus a mean row") {
    TempDir tmp;
    const auto ckpt = make_untrained_ckpt(tmp, "m.fgrn");
    write_dataset(tmp, "hr", 3, 32, 51);
    auto r = run_cli(tmp, "eval --ckpt " + ckpt + " --hr-dir " + tmp.file("hr") + " --report " +
                              tmp.file("rep.csv"));
    REQUIRE(r.exit_code == 0);
    auto lines = csv_lines(slurp(tmp.file("rep.csv")));
    REQUIRE(lines.size() == 5); // header + 3 rows + mean
    CHECK(lines[0] == "file,psnr_db,ssim");
    CHECK(lines[1].rfind("img00.png,", 0) == 0);
    CHECK(lines[4].rfind("mean,", 0) == 0);
}

TEST_CASE("identical model evaluated twice gives identical reports") {
    TempDir tmp;
    const auto ckpt = make_untrained_ckpt(tmp, "m.fgrn");
    write_dataset(tmp, "hr", 2, 32, 53);
    auto r1 = run_cli(tmp, "eval --ckpt " + ckpt + " --hr-dir " + tmp.file("hr") + " --report " +
                               tmp.file("rep1.csv"));
    auto r2 = run_cli(tmp, "eval --ckpt " + ckpt + " --hr-dir " + tmp.file("hr") + " --report " +
                               tmp.file("rep2.csv"));
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(tmp.file("rep1.csv")) == slurp(tmp.file("rep2.csv")));
}

TEST_CASE("bicubic bypass reproduces the in-process baseline exactly") {
    TempDir tmp;
    write_dataset(tmp, "hr", 2, 36, 57);
    auto r = run_cli(tmp, "eval --bicubic --scale 2 --hr-dir " + tmp.file("hr") + " --report " +
                              tmp.file("rep.csv"));
    REQUIRE(r.exit_code == 0);

    MetricReport expect;
    for (const auto& [name, img] : png_load_dir(tmp.file("hr"))) {
        auto lr = bicubic_resize(img, img.height / 2, img.width / 2);
        auto rec = bicubic_resize(lr, img.height, img.width);
        expect.rows.push_back({name, psnr_y(img, rec, 2), ssim_y(img, rec, 2)});
    }
    CHECK(slurp(tmp.file("rep.csv")) == expect.to_csv());
}

} // TEST_SUITE

TEST_SUITE("cli/train") {

TEST_CASE("same seed twice gives identical loss logs") {
    TempDir tmp;
    write_dataset(tmp, "data", 2, 48, 61);
    write_config(tmp.file("c.cfg"), "total_iters=40\nguidance_mode=flow\n");
    auto r1 = run_cli(tmp, "train --config " + tmp.file("c.cfg") + " --data " + tmp.file("data") +
                               " --out " + tmp.file("m1.fgrn") + " --log " + tmp.file("l1.csv"));
    auto r2 = run_cli(tmp, "train --config " + tmp.file("c.cfg") + " --data " + tmp.file("data") +
                               " --out " + tmp.file("m2.fgrn") + " --log " + tmp.file("l2.csv"));
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    const auto l1 = slurp(tmp.file("l1.csv"));
    CHECK(l1 == slurp(tmp.file("l2.csv")));
    CHECK(csv_lines(l1).size() == 41); // header + 40 iterations
    CHECK(slurp(tmp.file("m1.fgrn")) == slurp(tmp.file("m2.fgrn")));
}

TEST_CASE("cli seed flag overrides the config") {
    TempDir tmp;
    write_dataset(tmp, "data", 2, 48, 63);
    write_config(tmp.file("c.cfg"), "total_iters=5\n");
    auto r1 = run_cli(tmp, "train --config " + tmp.file("c.cfg") + " --data " + tmp.file("data") +
                               " --seed 9 --out " + tmp.file("m1.fgrn") + " --log " + tmp.file("l1.csv"));
    auto r2 = run_cli(tmp, "train --config " + tmp.file("c.cfg") + " --data " + tmp.file("data") +
                               " --seed 10 --out " + tmp.file("m2.fgrn") + " --log " + tmp.file("l2.csv"));
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(tmp.file("l1.csv")) != slurp(tmp.file("l2.csv")));
}

TEST_CASE("2000 iterations on four tiny images overfit" * doctest::timeout(600)) {
    TempDir tmp;
    write_dataset(tmp, "data", 4, 48, 67);
    write_config(tmp.file("c.cfg"), "total_iters=2000\nguidance_mode=none\n");
    auto r = run_cli(tmp, "train --config " + tmp.file("c.cfg") + " --data " + tmp.file("data") +
                              " --out " + tmp.file("m.fgrn") + " --log " + tmp.file("loss.csv"));
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(tmp.file("m.fgrn")));
    auto lines = csv_lines(slurp(tmp.file("loss.csv")));
    REQUIRE(lines.size() == 2001);
    auto l_rec_of = [&](const std::string& line) {
        // iter,lr,l_rec,l_guide
        std::size_t p1 = line.find(',');
        std::size_t p2 = line.find(',', p1 + 1);
        std::size_t p3 = line.find(',', p2 + 1);
        return std::stod(line.substr(p2 + 1, p3 - p2 - 1));
    };
    const double at10 = l_rec_of(lines[11]); // header + iters 0..10
    const double last = l_rec_of(lines.back());
    CHECK(last < 0.1 * at10);
}

} // TEST_SUITE
