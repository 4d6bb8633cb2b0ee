#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "advs/attack.hpp"
#include "advs/pipeline.hpp"

namespace advs {

inline constexpr int kReportSchemaVersion = 1;

struct EvalReport {
    std::size_t attack_success_count = 0;
    std::size_t attack_fail_count = 0;
    std::size_t defense_success_count = 0;
    std::size_t defense_fail_count = 0;
    double attack_rate = 0;
    double defense_accuracy = 0;
    double epsilon = 0;
    std::size_t n_channels = 0;
    std::uint64_t seed = 0;
    // Mean per-pixel mse against the clean image over the evaluated samples.
    double mse_adv = 0;
    double mse_denoised = 0;

    /// Count and ratio consistency. Throws Error on violation.
    void validate() const;
    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Builds a report from counts alone; ratios are derived.
EvalReport make_report(std::size_t attack_success, std::size_t attack_fail, std::size_t defense_success,
                       std::size_t defense_fail);

/// Runs every clean-correct sample of `adv` through the defense with a
/// per-sample channel stream Rng(seed, index). Samples the classifier already
/// got wrong are skipped, so attack and defense share one denominator.
EvalReport evaluate(const Network& net, const Pipeline& p, const AdvDataset& adv, std::uint64_t seed);

/// Six labelled lines. `legacy_labels` keeps the historical "succesfull" spelling.
std::string format_report_text(const EvalReport& r, bool legacy_labels = false);

std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);

/// Writes <stem>.txt and <stem>.json next to each other; `path` may carry
/// either extension or none.
void emit_report(const EvalReport& r, const std::filesystem::path& path, bool legacy_labels = false);
EvalReport read_report(const std::filesystem::path& json_path);

}  // namespace advs
