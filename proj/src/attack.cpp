#include "advs/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "advs/classifier.hpp"
#include "advs/image_io.hpp"

namespace advs {

void AttackConfig::validate() const {
    if (!(clip_lo < clip_hi)) throw RangeError("attack: clip_lo must be below clip_hi");
    if (!(epsilon >= 0.0) || epsilon > clip_hi - clip_lo)
        throw RangeError("attack: epsilon " + std::to_string(epsilon) + " outside [0, clip_hi - clip_lo]");
}

void AdvDataset::validate() const {
    if (samples.empty()) throw RangeError("adversarial dataset is empty");
    config.validate();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const AdvSample& s = samples[i];
        const std::string at = "adversarial sample " + std::to_string(i);
        if (s.clean.shape() != s.adv.shape()) throw ShapeError(at + ": clean/adv shapes differ");
        if (s.true_label >= kNumClasses || s.clean_pred >= kNumClasses || s.adv_pred >= kNumClasses)
            throw RangeError(at + ": label or prediction outside [0,10)");
        for (std::size_t p = 0; p < s.adv.size(); ++p) {
            const double a = s.adv[p];
            if (!(a >= config.clip_lo && a <= config.clip_hi)) throw RangeError(at + ": pixel outside clip range");
            if (std::abs(a - double(s.clean[p])) > config.epsilon + 1e-6)
                throw RangeError(at + ": perturbation exceeds epsilon");
        }
    }
}

Tensor fgsm(const Network& net, const Tensor& image, std::size_t label, const AttackConfig& cfg) {
    cfg.validate();
    check_unit_range(image, "fgsm");
    if (label >= net.output_shape().front()) throw RangeError("fgsm: label " + std::to_string(label) + " out of range");

    ComputeGraph<float> g;
    const NodeId x = g.input(image, true);
    const Trace t = trace(g, x, net, false);
    const NodeId loss = g.softmax_cross_entropy(t.output, label);
    const auto grads = g.backward(loss);
    const Tensor& grad = grads.at(x);
    if (!grad.all_finite()) throw RangeError("fgsm: non-finite input gradient");

    Tensor adv = image;
    if (cfg.epsilon == 0.0) return adv;
    const float eps = float(cfg.epsilon);
    const float lo = float(cfg.clip_lo), hi = float(cfg.clip_hi);
    for (std::size_t i = 0; i < adv.size(); ++i) {
        if (grad[i] == 0.0f) continue;
        const float step = grad[i] > 0.0f ? eps : -eps;
        adv[i] = std::clamp(image[i] + step, lo, hi);
    }
    return adv;
}

AdvDataset build_adv_dataset(const Network& net, const Dataset& data, const AttackConfig& cfg) {
    if (data.empty()) throw RangeError("build_adv_dataset: empty dataset");
    cfg.validate();
    AdvDataset out;
    out.config = cfg;
    out.source_model_id = fingerprint(net);
    out.samples.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        AdvSample s;
        s.clean = data.images[i];
        s.true_label = data.labels[i];
        s.clean_pred = classify(net, s.clean).label;
        s.adv = fgsm(net, s.clean, s.true_label, cfg);
        s.adv_pred = classify(net, s.adv).label;
        out.samples.push_back(std::move(s));
    }
    return out;
}

double attack_success_rate(const AdvDataset& ds) {
    if (ds.empty()) throw RangeError("attack_success_rate: empty dataset");
    std::size_t correct = 0, flipped = 0;
    for (const AdvSample& s : ds.samples) {
        if (s.clean_pred != s.true_label) continue;
        ++correct;
        flipped += s.adv_pred != s.true_label;
    }
    if (correct == 0) throw RangeError("attack_success_rate: no clean-correct samples");
    return double(flipped) / double(correct);
}

namespace {

std::string numbered(const char* stem, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%05zu.f32", stem, i);
    return buf;
}

Tensor read_image_payload(const std::filesystem::path& path, const Shape& shape) {
    std::vector<float> v = read_f32_raw(path);
    if (v.size() != shape_size(shape))
        throw FormatError(FormatFault::truncated, path.string() + ": expected " + std::to_string(shape_size(shape)) +
                                                      " floats, found " + std::to_string(v.size()));
    return Tensor(shape, std::move(v));
}

}  // namespace

void save_adv_dataset(const AdvDataset& ds, const std::filesystem::path& dir) {
    ds.validate();
    std::filesystem::create_directories(dir);
    nlohmann::json m;
    m["schema_version"] = kAdvManifestVersion;
    m["source_model_id"] = ds.source_model_id;
    m["config"] = {{"epsilon", ds.config.epsilon}, {"clip_lo", ds.config.clip_lo}, {"clip_hi", ds.config.clip_hi}};
    m["image_shape"] = ds.samples.front().clean.shape();
    auto& recs = m["samples"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const AdvSample& s = ds.samples[i];
        const std::string clean = numbered("clean", i), adv = numbered("adv", i);
        write_f32_raw(dir / clean, s.clean.data());
        write_f32_raw(dir / adv, s.adv.data());
        recs.push_back({{"true_label", s.true_label},
                        {"clean_pred", s.clean_pred},
                        {"adv_pred", s.adv_pred},
                        {"clean_file", clean},
                        {"adv_file", adv}});
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << m.dump(2) << '\n';
}

AdvDataset load_adv_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatFault::bad_header, "adversarial manifest: " + std::string(e.what()));
    }
    try {
        if (m.at("schema_version").get<int>() != kAdvManifestVersion)
            throw FormatError(FormatFault::bad_version, "adversarial manifest: unsupported schema version");
        AdvDataset ds;
        ds.source_model_id = m.at("source_model_id").get<std::string>();
        const auto& c = m.at("config");
        ds.config = {c.at("epsilon").get<double>(), c.at("clip_lo").get<double>(), c.at("clip_hi").get<double>()};
        const Shape shape = m.at("image_shape").get<Shape>();
        for (const auto& r : m.at("samples")) {
            AdvSample s;
            s.true_label = r.at("true_label").get<std::size_t>();
            s.clean_pred = r.at("clean_pred").get<std::size_t>();
            s.adv_pred = r.at("adv_pred").get<std::size_t>();
            s.clean = read_image_payload(dir / r.at("clean_file").get<std::string>(), shape);
            s.adv = read_image_payload(dir / r.at("adv_file").get<std::string>(), shape);
            ds.samples.push_back(std::move(s));
        }
        ds.validate();
        return ds;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatFault::bad_header, "adversarial manifest: " + std::string(e.what()));
    }
}

}  // namespace advs
