#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "advs/dataset.hpp"
#include "advs/network.hpp"

namespace advs {

struct AttackConfig {
    double epsilon = 0.2;  // L-inf budget on the [0,1] pixel scale
    double clip_lo = 0.0;
    double clip_hi = 1.0;

    /// clip_lo < clip_hi and 0 <= epsilon <= clip_hi - clip_lo.
    void validate() const;
};

struct AdvSample {
    Tensor clean;
    Tensor adv;
    std::size_t true_label = 0;
    std::size_t clean_pred = 0;
    std::size_t adv_pred = 0;
};

struct AdvDataset {
    std::vector<AdvSample> samples;
    AttackConfig config;
    std::string source_model_id;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    /// Non-empty; every sample within the L-inf budget (+1e-6), inside the
    /// clip range, with labels and predictions in [0,10).
    void validate() const;
};

/// Fast gradient sign step: clip(x + eps * sign(d loss / d x)). sign(0) = 0,
/// so pixels with a zero gradient are left untouched. The network is not modified.
Tensor fgsm(const Network& net, const Tensor& image, std::size_t label, const AttackConfig& cfg);

/// Attacks every image of `data` in order, recording clean and adversarial predictions.
AdvDataset build_adv_dataset(const Network& net, const Dataset& data, const AttackConfig& cfg);

/// Fraction of clean-correct samples whose adversarial version is misclassified.
double attack_success_rate(const AdvDataset& ds);

/// Directory layout: manifest.json plus clean_NNNNN.f32 / adv_NNNNN.f32
/// (little-endian float32 payloads).
void save_adv_dataset(const AdvDataset& ds, const std::filesystem::path& dir);
AdvDataset load_adv_dataset(const std::filesystem::path& dir);

inline constexpr int kAdvManifestVersion = 1;

}  // namespace advs
