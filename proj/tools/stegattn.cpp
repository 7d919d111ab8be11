// Command-line surface: train, compare, hide, reveal, gradcheck.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
// Machine-readable output goes to stdout or the files named in flags;
// diagnostics go to stderr.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "stegattn/checkpoint.hpp"
#include "stegattn/compare.hpp"
#include "stegattn/gradcheck.hpp"
#include "stegattn/metrics.hpp"
#include "stegattn/train.hpp"

namespace {

using namespace stegattn;

// Renders +inf the same way the CSV does; plain value otherwise.
std::string print_metric(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

AttentionMode require_mode(const std::string& token) {
    auto m = parse_mode(token);
    if (!m)
        throw UsageError("unknown mode '" + token + "'; valid modes: " +
                         valid_mode_tokens());
    return *m;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("cannot open for writing: " + path);
    bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    ok = std::fclose(f) == 0 && ok;
    if (!ok) throw DataError("failed writing: " + path);
}

void add_train_flags(CLI::App* cmd, TrainConfig& cfg, std::string& mode_token) {
    cmd->add_option("--seed", cfg.seed, "RNG seed");
    cmd->add_option("--steps", cfg.steps, "optimizer steps");
    cmd->add_option("--image-size", cfg.image_size, "square image side");
    cmd->add_option("--batch", cfg.batch_size, "batch size");
    cmd->add_option("--lr", cfg.learning_rate, "learning rate");
    cmd->add_option("--beta", cfg.beta, "secret reconstruction loss weight");
    cmd->add_option("--ratio", cfg.reduction_ratio, "channel attention reduction ratio");
    cmd->add_flag("--decoder-attention", cfg.decoder_attention,
                  "apply attention in the reveal network too");
    (void)mode_token;
}

int cmd_train(const TrainConfig& cfg, const std::string& out) {
    auto result = train(cfg);
    save_checkpoint(result.params, cfg, out);
    write_text_file(out + ".loss.csv", loss_log_csv(result.loss_log));
    std::cout << "final_loss=" << result.loss_log.back() << "\n";
    return 0;
}

int cmd_compare(const TrainConfig& cfg, const std::string& out) {
    auto outcome = compare(cfg);
    write_text_file(out, compare_csv(outcome));
    std::cout << outcome.trend_note << "\n";
    if (!outcome.all_ok()) {
        for (const auto& e : outcome.errors)
            if (!e.empty()) std::cerr << "error: " << e << "\n";
        return 3;
    }
    return 0;
}

int cmd_hide(const std::string& ckpt, const std::string& cover_path,
             const std::string& secret_path, const std::string& out) {
    auto [params, cfg] = load_checkpoint(ckpt);
    auto cover = load_image(cover_path, cfg.image_size);
    auto secret = load_image(secret_path, cfg.image_size);
    auto mv = ModelVars<float>::from(params);
    auto stego = hide_forward(make_constant(cover),
                              prep_forward(make_constant(secret), mv), mv);
    save_image(out, stego->value);
    std::cout << "psnr_cover=" << print_metric(psnr(cover, stego->value))
              << " ssim_cover=" << ssim(cover, stego->value) << "\n";
    return 0;
}

int cmd_reveal(const std::string& ckpt, const std::string& stego_path,
               const std::string& secret_path, const std::string& out) {
    auto [params, cfg] = load_checkpoint(ckpt);
    auto stego = load_image(stego_path, cfg.image_size);
    auto mv = ModelVars<float>::from(params);
    auto rec = reveal_forward(make_constant(stego), mv);
    save_image(out, rec->value);
    if (!secret_path.empty()) {
        auto secret = load_image(secret_path, cfg.image_size);
        std::cout << "psnr_secret=" << print_metric(psnr(secret, rec->value))
                  << " ssim_secret=" << ssim(secret, rec->value) << "\n";
    }
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, bool full, const std::string& corrupt_op) {
    detail::corrupt_backward_op() = corrupt_op;
    auto results = run_op_gradchecks(seed);
    if (full) {
        auto model = run_model_gradcheck(seed, /*all_modes=*/true);
        results.insert(results.end(), model.begin(), model.end());
    }
    int rc = 0;
    for (const auto& r : results) {
        std::printf("%-40s rel_err=%.3e tol=%.0e %s\n", r.name.c_str(), r.rel_err,
                    r.tolerance, r.pass ? "PASS" : "FAIL");
        if (!r.pass) {
            std::cerr << "gradient check failed for " << r.name << " (rel_err="
                      << r.rel_err << ")\n";
            rc = 3;
        }
    }
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attention-augmented image steganography"};
    app.require_subcommand(1);

    TrainConfig cfg;
    std::string mode_token_arg = "baseline";
    std::string out_path, ckpt_path, cover_path, secret_path, stego_path;
    std::string corrupt_op;
    bool full = false;
    std::uint64_t gc_seed = 12345;

    auto* train_cmd = app.add_subcommand("train", "train one model, write a checkpoint");
    train_cmd->add_option("--data", cfg.data_dir, "image folder")->required();
    train_cmd->add_option("--mode", mode_token_arg, "attention wiring")->required();
    train_cmd->add_option("--out", out_path, "checkpoint path")->required();
    add_train_flags(train_cmd, cfg, mode_token_arg);

    auto* compare_cmd =
        app.add_subcommand("compare", "train all six wirings, write the comparison CSV");
    compare_cmd->add_option("--data", cfg.data_dir, "image folder")->required();
    compare_cmd->add_option("--out", out_path, "CSV path")->required();
    add_train_flags(compare_cmd, cfg, mode_token_arg);

    auto* hide_cmd = app.add_subcommand("hide", "embed a secret image into a cover image");
    hide_cmd->add_option("--checkpoint", ckpt_path)->required();
    hide_cmd->add_option("--cover", cover_path)->required();
    hide_cmd->add_option("--secret", secret_path)->required();
    hide_cmd->add_option("--out", out_path, "stego PNG path")->required();

    auto* reveal_cmd = app.add_subcommand("reveal", "reconstruct the secret from a stego image");
    reveal_cmd->add_option("--checkpoint", ckpt_path)->required();
    reveal_cmd->add_option("--stego", stego_path)->required();
    reveal_cmd->add_option("--secret", secret_path,
                           "original secret; when given, prints reconstruction metrics");
    reveal_cmd->add_option("--out", out_path, "reconstructed PNG path")->required();

    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference verification of all gradients");
    gradcheck_cmd->add_flag("--full", full, "also run the end-to-end model check");
    gradcheck_cmd->add_option("--seed", gc_seed, "RNG seed");
    gradcheck_cmd->add_option("--corrupt-op", corrupt_op)
        ->group("");  // hidden: negative-control hook for the test harness

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*train_cmd) {
            cfg.mode = require_mode(mode_token_arg);
            return cmd_train(cfg, out_path);
        }
        if (*compare_cmd) return cmd_compare(cfg, out_path);
        if (*hide_cmd) return cmd_hide(ckpt_path, cover_path, secret_path, out_path);
        if (*reveal_cmd) return cmd_reveal(ckpt_path, stego_path, secret_path, out_path);
        if (*gradcheck_cmd) return cmd_gradcheck(gc_seed, full, corrupt_op);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {  // NumericError, ShapeError, anything else
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
