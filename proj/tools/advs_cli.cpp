// advs: command-line front end for the adversarial defense toolkit.
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "advs/checkpoint.hpp"
#include "advs/experiment.hpp"

#ifndef ADVS_DATA_DIR
#define ADVS_DATA_DIR "data/mnist"
#endif

namespace fs = std::filesystem;
using namespace advs;

namespace {

Tensor load_gray(const fs::path& path) {
    const Image8 img = read_image(path);
    if (img.channels != 1) throw FormatError(FormatFault::bad_header, path.string() + ": expected a grayscale image");
    Tensor t(Shape{1, img.height, img.width});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) t[i] = float(img.pixels[i]) / 255.0f;
    return t;
}

void write_explanation(const RunConfig& cfg, const fs::path& dir, const Tensor& image, const CamHeatmap& cam) {
    fs::create_directories(dir);
    const bool png = cfg.image_format == ImageFormat::png;
    save_image(cam.values, dir / (png ? "heatmap.png" : "heatmap.pgm"), cfg.image_format);
    write_f32_raw(dir / "heatmap.f32", cam.values.data());
    write_image(overlay(image, cam), dir / (png ? "overlay.png" : "overlay.ppm"), cfg.image_format);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial attack and defense toolkit for 28x28 digit classifiers"};
    app.require_subcommand(1);

    std::string config_file;
    bool quiet = false, dump_config = false;
    app.add_option("--config", config_file, "Flat key = value configuration file (flags override it)");
    app.add_flag("-q,--quiet", quiet, "Suppress progress messages");
    app.add_flag("--dump-config", dump_config, "Print the effective configuration before running");

    std::map<std::string, std::optional<std::string>> overrides;
    for (const std::string& key : config_keys()) {
        auto& slot = overrides[key];
        app.add_option_function<std::string>("--" + key, [&slot](const std::string& v) { slot = v; },
                                              "Overrides the '" + key + "' setting");
    }

    std::map<std::string, CLI::App*> subs;
    subs["train-classifier"] = app.add_subcommand("train-classifier", "Train the reference classifier");
    subs["train-switch"] = app.add_subcommand("train-switch", "Train sub-models and the shared upper body");
    subs["attack"] = app.add_subcommand("attack", "Build the FGSM evaluation and auto-encoder training sets");
    subs["train-autoencoder"] = app.add_subcommand("train-autoencoder", "Train the denoising auto-encoder");
    subs["eval"] = app.add_subcommand("eval", "Evaluate the defense and write the report");
    subs["run-all"] = app.add_subcommand("run-all", "Run every phase in order");

    fs::path image_path, out_dir;
    std::optional<std::size_t> raw_pred, channel, class_idx;
    std::optional<std::uint64_t> seed;
    CLI::App* defend_cmd = app.add_subcommand("defend", "Run one image through the trained defense");
    defend_cmd->add_option("--image", image_path, "PGM or PNG grayscale image")->required()->check(CLI::ExistingFile);
    defend_cmd->add_option("--raw-pred", raw_pred, "Label predicted by the undefended classifier (default: computed)");
    defend_cmd->add_option("--seed", seed, "Channel draw seed (default: eval-seed)");
    defend_cmd->add_option("--out", out_dir, "Directory for the denoised image and explanation");
    CLI::App* cam_cmd = app.add_subcommand("gradcam", "Grad-CAM heatmap for one image and channel");
    cam_cmd->add_option("--image", image_path, "PGM or PNG grayscale image")->required()->check(CLI::ExistingFile);
    cam_cmd->add_option("--channel", channel, "Ensemble channel (default 0)");
    cam_cmd->add_option("--class", class_idx, "Class to explain (default: the channel's prediction)");
    cam_cmd->add_option("--out", out_dir, "Output directory");
    for (CLI::App* s : app.get_subcommands({})) s->fallthrough();

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg = default_config(ADVS_DATA_DIR);
    const Logger log = [quiet](const std::string& msg) {
        if (!quiet) std::cerr << msg << (msg.empty() || msg.back() != '\n' ? "\n" : "");
    };
    try {
        if (!config_file.empty()) apply_config_file(cfg, config_file);
        for (const auto& [key, value] : overrides)
            if (value) set_config_value(cfg, key, *value);
        if (dump_config)
            for (const std::string& key : config_keys()) std::cout << key << " = " << get_config_value(cfg, key) << "\n";

        for (const auto& [name, cmd] : subs) {
            if (!cmd->parsed()) continue;
            if (name == "run-all") {
                const EvalReport r = run_experiment(cfg, log);
                std::cout << format_report_text(r, cfg.legacy_labels);
            } else {
                run_phase(cfg, name, log);
                if (name == "eval")
                    std::cout << format_report_text(read_report(RunPaths{cfg.output_dir}.report().concat(".json")),
                                                    cfg.legacy_labels);
            }
        }

        if (defend_cmd->parsed()) {
            try {
                const Tensor image = load_gray(image_path);
                const Pipeline p = load_pipeline(cfg);
                const std::size_t pred =
                    raw_pred ? *raw_pred : classify(load_classifier(RunPaths{cfg.output_dir}.classifier()), image).label;
                Rng rng(seed.value_or(cfg.eval_seed), 0);
                const PipelineOutput out = defend(p, image, pred, rng);
                std::cout << "raw prediction   : " << pred << "\n"
                          << "defended label   : " << out.label << "\n"
                          << "channel          : " << out.heatmap.channel_used << "\n"
                          << "suspected attack : " << (out.suspected_attack ? "yes" : "no") << "\n";
                if (!out_dir.empty()) {
                    fs::create_directories(out_dir);
                    save_image(out.denoised, out_dir / (cfg.image_format == ImageFormat::png ? "denoised.png" : "denoised.pgm"),
                               cfg.image_format);
                    write_explanation(cfg, out_dir, out.denoised, out.heatmap);
                }
            } catch (const PhaseError&) {
                throw;
            } catch (const std::exception& e) {
                throw PhaseError("defend", e.what());
            }
        }

        if (cam_cmd->parsed()) {
            try {
                const Tensor image = load_gray(image_path);
                const SwitchEnsemble ens = load_ensemble(RunPaths{cfg.output_dir}.ensemble());
                const std::size_t ch = channel.value_or(0);
                const std::size_t cls = class_idx ? *class_idx : predict_from_logits(ens.logits(image, ch)).label;
                if (ch >= ens.size()) throw RangeError("channel " + std::to_string(ch) + " out of range");
                const CamHeatmap cam = gradcam(ens.channels[ch], ens.upper, image, cls, cfg.cam_layer, ch);
                std::cout << "class " << cls << " channel " << ch << "\n";
                write_explanation(cfg, out_dir.empty() ? fs::path(cfg.output_dir) / "gradcam" : out_dir, image, cam);
            } catch (const PhaseError&) {
                throw;
            } catch (const std::exception& e) {
                throw PhaseError("gradcam", e.what());
            }
        }
    } catch (const PhaseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: [config] " << e.what() << "\n";
        return 1;
    }
    return 0;
}
