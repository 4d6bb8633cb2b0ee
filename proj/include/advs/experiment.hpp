#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "advs/image_io.hpp"
#include "advs/report.hpp"

namespace advs {

struct RunConfig {
    std::filesystem::path train_images, train_labels, test_images, test_labels;
    std::filesystem::path output_dir = "advs_run";

    double epsilon = 0.2;
    std::size_t channels = 4;
    std::size_t split_index = kClassifierSplit;
    std::size_t cam_layer = kClassifierCamLayer;

    std::size_t classifier_epochs = 5, switch_epochs = 5, upper_epochs = 10, ae_epochs = 20;
    double classifier_lr = 0.01, switch_lr = 0.01, upper_lr = 0.003, ae_lr = 0.003;
    OptimizerKind ae_optimizer = OptimizerKind::adam;  // the classifiers always use momentum SGD
    double momentum = 0.9;
    std::size_t batch_size = 32;

    std::size_t train_limit = 0;  // 0 keeps the whole training split
    std::size_t eval_count = 96;
    std::size_t ae_train_count = 4000;
    std::size_t sample_images = 4;
    ImageFormat image_format = ImageFormat::png;

    std::uint64_t classifier_seed = 1, switch_seed = 101, upper_seed = 201, ae_seed = 301;
    std::uint64_t sample_seed = 401, eval_seed = 501;

    bool reuse = false;          // keep outputs of phases that already ran
    bool legacy_labels = false;  // historical report spelling

    /// Value ranges and presence of the four dataset files.
    void validate() const;
};

/// IDX files of the bundled digit set under `data_dir`.
RunConfig default_config(const std::filesystem::path& data_dir);

/// Flat configuration keys, in declaration order.
const std::vector<std::string>& config_keys();
/// Throws RangeError for an unknown key or a malformed value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// "key = value" lines; '#' starts a comment; blank lines are ignored.
std::map<std::string, std::string> parse_config_text(const std::string& text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

using Logger = std::function<void(const std::string&)>;

/// Files written below output_dir.
struct RunPaths {
    std::filesystem::path root;
    std::filesystem::path classifier() const { return root / "classifier.ckpt"; }
    std::filesystem::path submodel(std::size_t k) const { return root / ("submodel_" + std::to_string(k) + ".ckpt"); }
    std::filesystem::path ensemble() const { return root / "ensemble.ckpt"; }
    std::filesystem::path adv_eval() const { return root / "adv_eval"; }
    std::filesystem::path adv_train() const { return root / "adv_ae_train"; }
    std::filesystem::path autoencoder() const { return root / "autoencoder.ckpt"; }
    std::filesystem::path report() const { return root / "report"; }
    std::filesystem::path samples() const { return root / "samples"; }
};

/// Phase names, in run order.
inline const std::vector<std::string> kPhases = {"train-classifier", "train-switch", "attack", "train-autoencoder",
                                                 "eval"};

/// Runs one phase; prerequisites are read from earlier checkpoints. Errors
/// surface as PhaseError tagged with the phase name.
void run_phase(const RunConfig& cfg, const std::string& phase, const Logger& log = {});

/// Every phase in order, then the report is read back.
EvalReport run_experiment(const RunConfig& cfg, const Logger& log = {});

/// Pipeline assembled from the checkpoints of a finished run.
Pipeline load_pipeline(const RunConfig& cfg);

}  // namespace advs
