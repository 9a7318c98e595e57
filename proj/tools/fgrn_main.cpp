// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <optional>

#include "fgrn/checkpoint.hpp"
#include "fgrn/metrics.hpp"
#include "png_io.hpp"
#include "verify_suites.hpp"

using namespace fgrn;

namespace {

PlanarImage crop_to_multiple(const PlanarImage& img, int s) {
    const int h = img.height / s * s;
    const int w = img.width / s * s;
    if (h == img.height && w == img.width) return img;
    PlanarImage out(h, w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y, x);
    return out;
}

PlanarImage downscale_image(const RescaleModelT<float>& model, const PlanarImage& img) {
    if (img.height % model.cfg.scale != 0 || img.width % model.cfg.scale != 0)
        raise(ErrorCode::NotDivisible, "image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                           " not divisible by scale " + std::to_string(model.cfg.scale));
    auto lr = model.downscale_lr(image_to_tensor<float>(img));
    return tensor_to_image(lr);
}

PlanarImage upscale_image(const RescaleModelT<float>& model, const PlanarImage& lr) {
    auto hr = model.upscale_hr(image_to_tensor<float>(lr));
    return tensor_to_image(hr); // clamps to [0,1]
}

int cmd_train(const std::string& config_path, const std::string& data_dir, const std::string& out_path,
              const std::string& mode_override, std::optional<std::int64_t> seed_override,
              std::string log_path) {
    TrainConfig cfg = config_path.empty() ? TrainConfig{} : TrainConfig::parse_file(config_path);
    if (!mode_override.empty()) cfg.mode = parse_guidance_mode(mode_override);
    if (seed_override) cfg.seed = static_cast<std::uint64_t>(*seed_override);
    cfg.validate();

    auto entries = png_load_dir(data_dir);
    if (entries.empty()) raise(ErrorCode::ImageTooSmall, "no .png images in " + data_dir);
    std::vector<PlanarImage> data;
    for (auto& [name, img] : entries) {
        if (img.height < cfg.hr_patch || img.width < cfg.hr_patch)
            raise(ErrorCode::ImageTooSmall, name + " is smaller than hr_patch " + std::to_string(cfg.hr_patch));
        data.push_back(std::move(img));
    }

    auto model = RescaleModelT<float>::create(cfg.model, cfg.seed);
    auto state = TrainStateT<float>::make(model);
    const auto s = model.summary();
    std::printf("training mode=%s scale=x%d images=%zu params=%" PRId64 " iters=%" PRId64 "\n",
                guidance_mode_name(cfg.mode), cfg.model.scale, data.size(), s.total, cfg.total_iters);

    if (log_path.empty()) log_path = out_path + ".loss.csv";
    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    if (!log) raise(ErrorCode::BadConfig, "cannot open loss log " + log_path);
    log << "iter,lr,l_rec,l_guide\n";

    Rng rng(cfg.seed);
    for (std::int64_t i = 0; i < cfg.total_iters; ++i) {
        auto batch = sample_batch<float>(data, cfg, rng);
        const auto r = train_step(model, batch, state, cfg);
        char line[160];
        std::snprintf(line, sizeof(line), "%" PRId64 ",%.9g,%.9g,%.9g\n", r.iter, r.lr, r.l_rec, r.l_guide);
        log << line;
        if ((i + 1) % 200 == 0 || i + 1 == cfg.total_iters)
            std::printf("iter %" PRId64 "/%" PRId64 "  lr=%.3g  l_rec=%.5g  l_guide=%.5g\n", i + 1,
                        cfg.total_iters, r.lr, r.l_rec, r.l_guide);
    }
    log.flush();
    checkpoint_save(model, &state, cfg, out_path);
    std::printf("checkpoint written to %s (loss log: %s)\n", out_path.c_str(), log_path.c_str());
    return 0;
}

int cmd_downscale(const std::string& ckpt, const std::string& in, const std::string& out) {
    auto model = checkpoint_load(ckpt);
    png_save(out, downscale_image(model, png_load(in)));
    return 0;
}

int cmd_upscale(const std::string& ckpt, const std::string& in, const std::string& out) {
    auto model = checkpoint_load(ckpt);
    png_save(out, upscale_image(model, png_load(in)));
    return 0;
}

int cmd_roundtrip(const std::string& ckpt, const std::string& in, const std::string& out_lr,
                  const std::string& out_hr) {
    auto model = checkpoint_load(ckpt);
    const auto hr = png_load(in);
    const auto lr = downscale_image(model, hr);
    png_save(out_lr, lr);
    const auto rec = upscale_image(model, lr);
    png_save(out_hr, rec);
    std::printf("lr=%s hr=%s psnr_db=%.4f ssim=%.6f\n", out_lr.c_str(), out_hr.c_str(),
                psnr_y(hr, rec, model.cfg.scale), ssim_y(hr, rec, model.cfg.scale));
    return 0;
}

int cmd_eval(const std::string& ckpt, bool bicubic, const std::string& hr_dir, const std::string& report_path,
             int crop, int bicubic_scale) {
    std::optional<RescaleModelT<float>> model;
    int scale = bicubic_scale;
    if (!bicubic) {
        model = checkpoint_load(ckpt);
        scale = model->cfg.scale;
    }
    if (crop < 0) crop = scale;

    auto entries = png_load_dir(hr_dir);
    if (entries.empty()) raise(ErrorCode::DecodeError, "no .png images in " + hr_dir);
    MetricReport report;
    for (const auto& [name, raw] : entries) {
        const auto hr = crop_to_multiple(raw, scale);
        PlanarImage rec;
        if (bicubic) {
            const auto lr = bicubic_resize(hr, hr.height / scale, hr.width / scale);
            rec = bicubic_resize(lr, hr.height, hr.width);
        } else {
            rec = upscale_image(*model, downscale_image(*model, hr));
        }
        report.rows.push_back({name, psnr_y(hr, rec, crop), ssim_y(hr, rec, crop)});
    }
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::BadConfig, "cannot open report " + report_path);
    out << report.to_csv();
    std::printf("%zu images  mean psnr=%.4f dB  mean ssim=%.6f  (report: %s)\n", report.rows.size(),
                report.mean_psnr(), report.mean_ssim(), report_path.c_str());
    return 0;
}

int cmd_verify(const std::string& ckpt, int trials) {
    std::optional<RescaleModelT<float>> model;
    if (!ckpt.empty()) {
        model = checkpoint_load(ckpt);
        const auto s = model->summary();
        std::printf("checkpoint %s: scale=x%d params=%" PRId64 "\n", ckpt.c_str(), model->cfg.scale, s.total);
    }
    const auto results = run_verify_suites(trials, model ? &*model : nullptr);
    bool all = true;
    for (const auto& r : results) {
        std::printf("%-42s max_err=%-12.3g threshold=%-8.3g %s\n", r.name.c_str(), r.max_err, r.threshold,
                    r.pass ? "PASS" : "FAIL");
        all = all && r.pass;
    }
    std::printf(all ? "verify: all suites passed\n" : "verify: FAILURES\n");
    return all ? 0 : 1;
}

int cmd_metrics(const std::string& ref, const std::string& test, int crop) {
    const auto a = png_load(ref);
    const auto b = png_load(test);
    std::printf("file,psnr_db,ssim\n");
    const double p = psnr_y(a, b, crop);
    std::printf("%s,%.6f,%.6f\n", test.c_str(), p, ssim_y(a, b, crop));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-guided image rescaling: learned downscale/upscale with an invertible LR guidance flow"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_path, mode_str, log_path;
    std::string ckpt, in_path, out_lr, out_hr, hr_dir, report_path, ref_path, test_path;
    std::optional<std::int64_t> seed;
    int trials = 100;
    int crop = -1;
    int metrics_crop = 0;
    int bicubic_scale = 2;
    bool bicubic = false;

    auto* train = app.add_subcommand("train", "train a rescaling model on a directory of PNG images");
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--data", data_dir, "directory of training PNGs")->required();
    train->add_option("--out", out_path, "checkpoint output path")->required();
    train->add_option("--mode", mode_str, "guidance mode: none|bic|flow");
    train->add_option("--seed", seed, "RNG seed override");
    train->add_option("--log", log_path, "loss log CSV path (default: <out>.loss.csv)");

    auto* down = app.add_subcommand("downscale", "downscale an HR PNG with a trained model");
    down->add_option("--ckpt", ckpt, "checkpoint path")->required();
    down->add_option("--in", in_path, "input HR PNG")->required();
    down->add_option("--out", out_path, "output LR PNG")->required();

    auto* up = app.add_subcommand("upscale", "reconstruct an HR PNG from a downscaled LR PNG");
    up->add_option("--ckpt", ckpt, "checkpoint path")->required();
    up->add_option("--in", in_path, "input LR PNG")->required();
    up->add_option("--out", out_path, "output HR PNG")->required();

    auto* rt = app.add_subcommand("roundtrip", "downscale then upscale, writing both results");
    rt->add_option("--ckpt", ckpt, "checkpoint path")->required();
    rt->add_option("--in", in_path, "input HR PNG")->required();
    rt->add_option("--out-lr", out_lr, "output LR PNG")->required();
    rt->add_option("--out-hr", out_hr, "output reconstructed HR PNG")->required();

    auto* ev = app.add_subcommand("eval", "evaluate reconstruction quality over a directory");
    ev->add_option("--ckpt", ckpt, "checkpoint path");
    ev->add_flag("--bicubic", bicubic, "evaluate the bicubic down+up baseline instead of a model");
    ev->add_option("--scale", bicubic_scale, "scale factor for --bicubic (default 2)");
    ev->add_option("--hr-dir", hr_dir, "directory of HR PNGs")->required();
    ev->add_option("--report", report_path, "output CSV report path")->required();
    ev->add_option("--crop", crop, "border crop in pixels (default: scale factor)");

    auto* ver = app.add_subcommand("verify", "run the module property suites");
    ver->add_option("--ckpt", ckpt, "optional checkpoint to include");
    ver->add_option("--trials", trials, "number of randomized trials (default 100)");

    auto* met = app.add_subcommand("metrics", "Y-channel PSNR/SSIM between two PNGs");
    met->add_option("--ref", ref_path, "reference PNG")->required();
    met->add_option("--test", test_path, "test PNG")->required();
    met->add_option("--crop", metrics_crop, "border crop in pixels (default 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::fprintf(stderr, "error: Usage: %s\n", e.what());
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(config_path, data_dir, out_path, mode_str, seed, log_path);
        if (down->parsed()) return cmd_downscale(ckpt, in_path, out_path);
        if (up->parsed()) return cmd_upscale(ckpt, in_path, out_path);
        if (rt->parsed()) return cmd_roundtrip(ckpt, in_path, out_lr, out_hr);
        if (ev->parsed()) {
            if (!bicubic && ckpt.empty())
                raise(ErrorCode::Usage, "eval requires --ckpt unless --bicubic is given");
            return cmd_eval(ckpt, bicubic, hr_dir, report_path, crop, bicubic_scale);
        }
        if (ver->parsed()) return cmd_verify(ckpt, trials);
        if (met->parsed()) return cmd_metrics(ref_path, test_path, metrics_crop);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.line().c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: Internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
