#include "advs/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace advs {

namespace {

// Two decimals, halves rounded up (printf would round the exact tie 90.625 to even).
std::string percent(double ratio) {
    const auto hundredths = static_cast<long long>(std::floor(ratio * 10000.0 + 0.5));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%02lld%%", hundredths / 100, hundredths % 100);
    return buf;
}

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : double(num) / double(den); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot create " + path.string());
    f << text;
    if (!f) throw IoError("write error in " + path.string());
}

}  // namespace

void EvalReport::validate() const {
    const std::size_t attacked = attack_success_count + attack_fail_count;
    const std::size_t defended = defense_success_count + defense_fail_count;
    if (attacked != defended)
        throw Error("report: attack total " + std::to_string(attacked) + " differs from defense total " +
                    std::to_string(defended));
    if (std::abs(attack_rate - ratio(attack_success_count, attacked)) > 1e-9)
        throw Error("report: attack_rate does not match the counts");
    if (std::abs(defense_accuracy - ratio(defense_success_count, defended)) > 1e-9)
        throw Error("report: defense_accuracy does not match the counts");
}

EvalReport make_report(std::size_t attack_success, std::size_t attack_fail, std::size_t defense_success,
                       std::size_t defense_fail) {
    EvalReport r;
    r.attack_success_count = attack_success;
    r.attack_fail_count = attack_fail;
    r.defense_success_count = defense_success;
    r.defense_fail_count = defense_fail;
    r.attack_rate = ratio(attack_success, attack_success + attack_fail);
    r.defense_accuracy = ratio(defense_success, defense_success + defense_fail);
    r.validate();
    return r;
}

EvalReport evaluate(const Network& net, const Pipeline& p, const AdvDataset& adv, std::uint64_t seed) {
    if (adv.empty()) throw RangeError("evaluate: empty adversarial dataset");
    if (adv.source_model_id != fingerprint(net))
        throw Error("evaluate: adversarial set was built against '" + adv.source_model_id + "', not '" +
                    fingerprint(net) + "'");
    std::size_t as = 0, af = 0, ds = 0, df = 0;
    double mse_adv = 0, mse_den = 0;
    for (std::size_t i = 0; i < adv.size(); ++i) {
        const AdvSample& s = adv.samples[i];
        if (s.clean_pred != s.true_label) continue;
        (s.adv_pred != s.true_label ? as : af)++;
        Rng rng(seed, i);
        const PipelineOutput out = defend(p, s.adv, s.adv_pred, rng);
        (out.label == s.true_label ? ds : df)++;
        mse_adv += mse(s.adv, s.clean);
        mse_den += mse(out.denoised, s.clean);
    }
    if (as + af == 0) throw RangeError("evaluate: no clean-correct samples");
    EvalReport r = make_report(as, af, ds, df);
    r.epsilon = adv.config.epsilon;
    r.n_channels = p.ens.size();
    r.seed = seed;
    r.mse_adv = mse_adv / double(as + af);
    r.mse_denoised = mse_den / double(as + af);
    return r;
}

std::string format_report_text(const EvalReport& r, bool legacy_labels) {
    std::string t;
    t += "Attack Successfully Performed in : " + std::to_string(r.attack_success_count) + " images\n";
    t += "Attack failed in : " + std::to_string(r.attack_fail_count) + " images\n";
    t += std::string(legacy_labels ? "Defense succesfull in : " : "Defense successful in : ") +
         std::to_string(r.defense_success_count) + " images\n";
    t += "Defense failed in : " + std::to_string(r.defense_fail_count) + " images\n";
    t += "Attack Model Accuracy : " + percent(r.attack_rate) + "\n";
    t += "Defense Model Accuracy : " + percent(r.defense_accuracy) + "\n";
    return t;
}

std::string report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["attack_success_count"] = r.attack_success_count;
    j["attack_fail_count"] = r.attack_fail_count;
    j["defense_success_count"] = r.defense_success_count;
    j["defense_fail_count"] = r.defense_fail_count;
    j["attack_rate"] = r.attack_rate;
    j["defense_accuracy"] = r.defense_accuracy;
    j["epsilon"] = r.epsilon;
    j["n_channels"] = r.n_channels;
    j["seed"] = r.seed;
    j["mse_adv"] = r.mse_adv;
    j["mse_denoised"] = r.mse_denoised;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatFault::bad_payload, std::string("report json: ") + e.what());
    }
    try {
        if (j.at("schema_version").get<int>() != kReportSchemaVersion)
            throw FormatError(FormatFault::bad_version, "report json: unsupported schema_version");
        EvalReport r;
        j.at("attack_success_count").get_to(r.attack_success_count);
        j.at("attack_fail_count").get_to(r.attack_fail_count);
        j.at("defense_success_count").get_to(r.defense_success_count);
        j.at("defense_fail_count").get_to(r.defense_fail_count);
        j.at("attack_rate").get_to(r.attack_rate);
        j.at("defense_accuracy").get_to(r.defense_accuracy);
        j.at("epsilon").get_to(r.epsilon);
        j.at("n_channels").get_to(r.n_channels);
        j.at("seed").get_to(r.seed);
        j.at("mse_adv").get_to(r.mse_adv);
        j.at("mse_denoised").get_to(r.mse_denoised);
        r.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatFault::bad_header, std::string("report json: ") + e.what());
    }
}

void emit_report(const EvalReport& r, const std::filesystem::path& path, bool legacy_labels) {
    r.validate();
    std::filesystem::path stem = path;
    if (stem.extension() == ".txt" || stem.extension() == ".json") stem.replace_extension();
    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    write_text(std::filesystem::path(stem).concat(".txt"), format_report_text(r, legacy_labels));
    write_text(std::filesystem::path(stem).concat(".json"), report_to_json(r));
}

EvalReport read_report(const std::filesystem::path& json_path) {
    std::ifstream f(json_path, std::ios::binary);
    if (!f) throw IoError("cannot open " + json_path.string());
    return report_from_json(std::string{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()});
}

}  // namespace advs
