#include "advs/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <type_traits>

#include "advs/checkpoint.hpp"

namespace advs {

namespace fs = std::filesystem;

namespace {

struct Field {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T v{};
    if (text.empty() || (std::is_unsigned_v<T> && text.front() == '-') || !(in >> v) || !(in >> std::ws).eof())
        throw RangeError("config: bad value '" + text + "' for " + key);
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw RangeError("config: bad boolean '" + text + "' for " + key);
}

std::string fmt_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

template <typename T>
Field num(std::string key, T RunConfig::*m) {
    return {key, [key, m](RunConfig& c, const std::string& v) { c.*m = parse_number<T>(key, v); },
            [m](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*m);
                else return std::to_string(c.*m);
            }};
}

Field path(std::string key, fs::path RunConfig::*m) {
    return {key, [m](RunConfig& c, const std::string& v) { c.*m = v; }, [m](const RunConfig& c) { return (c.*m).string(); }};
}

Field flag(std::string key, bool RunConfig::*m) {
    return {key, [key, m](RunConfig& c, const std::string& v) { c.*m = parse_bool(key, v); },
            [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        path("train-images", &RunConfig::train_images),
        path("train-labels", &RunConfig::train_labels),
        path("test-images", &RunConfig::test_images),
        path("test-labels", &RunConfig::test_labels),
        path("output-dir", &RunConfig::output_dir),
        num("epsilon", &RunConfig::epsilon),
        num("channels", &RunConfig::channels),
        num("split-index", &RunConfig::split_index),
        num("cam-layer", &RunConfig::cam_layer),
        num("classifier-epochs", &RunConfig::classifier_epochs),
        num("switch-epochs", &RunConfig::switch_epochs),
        num("upper-epochs", &RunConfig::upper_epochs),
        num("ae-epochs", &RunConfig::ae_epochs),
        num("classifier-lr", &RunConfig::classifier_lr),
        num("switch-lr", &RunConfig::switch_lr),
        num("upper-lr", &RunConfig::upper_lr),
        num("ae-lr", &RunConfig::ae_lr),
        {"ae-optimizer",
         [](RunConfig& c, const std::string& v) {
             if (v == "adam") c.ae_optimizer = OptimizerKind::adam;
             else if (v == "sgd") c.ae_optimizer = OptimizerKind::sgd;
             else throw RangeError("config: ae-optimizer must be adam or sgd, got '" + v + "'");
         },
         [](const RunConfig& c) { return std::string(c.ae_optimizer == OptimizerKind::adam ? "adam" : "sgd"); }},
        num("momentum", &RunConfig::momentum),
        num("batch-size", &RunConfig::batch_size),
        num("train-limit", &RunConfig::train_limit),
        num("eval-count", &RunConfig::eval_count),
        num("ae-train-count", &RunConfig::ae_train_count),
        num("sample-images", &RunConfig::sample_images),
        {"image-format",
         [](RunConfig& c, const std::string& v) {
             if (v == "png") c.image_format = ImageFormat::png;
             else if (v == "pgm") c.image_format = ImageFormat::pgm;
             else throw RangeError("config: image-format must be png or pgm, got '" + v + "'");
         },
         [](const RunConfig& c) { return std::string(c.image_format == ImageFormat::png ? "png" : "pgm"); }},
        num("classifier-seed", &RunConfig::classifier_seed),
        num("switch-seed", &RunConfig::switch_seed),
        num("upper-seed", &RunConfig::upper_seed),
        num("ae-seed", &RunConfig::ae_seed),
        num("sample-seed", &RunConfig::sample_seed),
        num("eval-seed", &RunConfig::eval_seed),
        flag("reuse", &RunConfig::reuse),
        flag("legacy-labels", &RunConfig::legacy_labels),
    };
    return table;
}

const Field& field(const std::string& key) {
    for (const Field& f : fields())
        if (f.key == key) return f;
    throw RangeError("config: unknown key '" + key + "'");
}

void say(const Logger& log, const std::string& msg) {
    if (log) log(msg);
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
    return buf;
}

struct Data {
    Dataset train, test;
};

Data load_data(const RunConfig& cfg) {
    Data d{load_idx(cfg.train_images, cfg.train_labels, Split::train),
           load_idx(cfg.test_images, cfg.test_labels, Split::test)};
    if (cfg.train_limit > 0 && cfg.train_limit < d.train.size()) d.train = subset(d.train, cfg.train_limit, cfg.sample_seed);
    return d;
}

TrainOptions options(const RunConfig& cfg, std::size_t epochs, double lr, std::uint64_t seed, const Logger& log,
                     const std::string& what) {
    TrainOptions o;
    o.epochs = epochs;
    o.lr = lr;
    o.momentum = cfg.momentum;
    o.batch_size = cfg.batch_size;
    o.seed = seed;
    if (log)
        o.on_epoch = [log, what](std::size_t e, double loss) {
            log(what + ": epoch " + std::to_string(e + 1) + " loss " + fmt_double(loss).substr(0, 8));
        };
    return o;
}

bool skip(const RunConfig& cfg, const fs::path& out, const Logger& log, const std::string& phase) {
    if (cfg.reuse && fs::exists(out)) {
        say(log, phase + ": reusing " + out.string());
        return true;
    }
    return false;
}

void phase_train_classifier(const RunConfig& cfg, const RunPaths& paths, const Logger& log) {
    if (skip(cfg, paths.classifier(), log, "train-classifier")) return;
    const Data d = load_data(cfg);
    Network net = build_classifier(cfg.classifier_seed);
    const TrainReport r = train_classifier(
        net, d.train, d.test, options(cfg, cfg.classifier_epochs, cfg.classifier_lr, cfg.classifier_seed, log, "classifier"));
    save_classifier(net, paths.classifier());
    say(log, "classifier: test accuracy " + pct(*r.test_accuracy));
}

void phase_train_switch(const RunConfig& cfg, const RunPaths& paths, const Logger& log) {
    if (skip(cfg, paths.ensemble(), log, "train-switch")) return;
    const Data d = load_data(cfg);

    bool have_all = cfg.reuse;
    for (std::size_t k = 0; k < cfg.channels && have_all; ++k) have_all = fs::exists(paths.submodel(k));
    std::vector<Network> subs;
    if (have_all) {
        say(log, "train-switch: reusing sub-model checkpoints");
        for (std::size_t k = 0; k < cfg.channels; ++k) subs.push_back(load_classifier(paths.submodel(k)));
    } else {
        std::vector<TrainReport> reports;
        subs = train_switch_level1(d.train, d.test, cfg.channels, cfg.switch_seed,
                                   options(cfg, cfg.switch_epochs, cfg.switch_lr, cfg.switch_seed, log, "sub-model"),
                                   &reports);
        for (std::size_t k = 0; k < subs.size(); ++k) {
            save_classifier(subs[k], paths.submodel(k));
            say(log, "sub-model " + std::to_string(k) + ": test accuracy " + pct(*reports[k].test_accuracy));
        }
    }

    SwitchEnsemble ens = assemble_switch(subs, cfg.split_index, cfg.upper_seed);
    const TrainReport r = train_switch_level2(
        ens, d.train, d.test, options(cfg, cfg.upper_epochs, cfg.upper_lr, cfg.upper_seed, log, "shared upper"));
    save_ensemble(ens, paths.ensemble());
    say(log, "switch ensemble: test accuracy " + pct(*r.test_accuracy));
}

void phase_attack(const RunConfig& cfg, const RunPaths& paths, const Logger& log) {
    if (fs::exists(paths.adv_train() / "manifest.json") && skip(cfg, paths.adv_eval() / "manifest.json", log, "attack"))
        return;
    const Data d = load_data(cfg);
    const Network net = load_classifier(paths.classifier());
    AttackConfig ac;
    ac.epsilon = cfg.epsilon;
    ac.validate();

    // Evaluation set: clean-correct test digits in seeded order.
    const Dataset order = subset(d.test, d.test.size(), cfg.sample_seed);
    Dataset picked;
    picked.split = Split::test;
    for (std::size_t i = 0; i < order.size() && picked.size() < cfg.eval_count; ++i) {
        if (classify(net, order.images[i]).label != order.labels[i]) continue;
        picked.images.push_back(order.images[i]);
        picked.labels.push_back(order.labels[i]);
    }
    if (picked.size() < cfg.eval_count)
        throw RangeError("only " + std::to_string(picked.size()) + " clean-correct test digits available, need " +
                         std::to_string(cfg.eval_count));
    const AdvDataset eval_set = build_adv_dataset(net, picked, ac);
    save_adv_dataset(eval_set, paths.adv_eval());
    say(log, "attack: " + pct(attack_success_rate(eval_set)) + " of " + std::to_string(eval_set.size()) +
                 " evaluation digits flipped");

    // Auto-encoder pairs come from the training split, disjoint from the evaluation set.
    const std::size_t n = std::min(cfg.ae_train_count, d.train.size());
    const AdvDataset train_set = build_adv_dataset(net, subset(d.train, n, cfg.sample_seed + 1), ac);
    save_adv_dataset(train_set, paths.adv_train());
    say(log, "attack: " + std::to_string(train_set.size()) + " auto-encoder training pairs");
}

void phase_train_autoencoder(const RunConfig& cfg, const RunPaths& paths, const Logger& log) {
    if (skip(cfg, paths.autoencoder(), log, "train-autoencoder")) return;
    const AdvDataset pairs = load_adv_dataset(paths.adv_train());
    AutoEncoder ae = build_autoencoder(cfg.ae_seed);
    TrainOptions o = options(cfg, cfg.ae_epochs, cfg.ae_lr, cfg.ae_seed, log, "auto-encoder");
    o.optimizer = cfg.ae_optimizer;
    const TrainReport r = train_autoencoder(ae, pairs, o);
    save_autoencoder(ae, paths.autoencoder());
    say(log, "auto-encoder: reconstruction mse " + fmt_double(r.final_train_loss));
}

void write_samples(const RunConfig& cfg, const RunPaths& paths, const Pipeline& p, const AdvDataset& adv) {
    const fs::path dir = paths.samples();
    fs::create_directories(dir);
    const std::string ext = cfg.image_format == ImageFormat::png ? ".png" : ".pgm";
    const std::string rgb_ext = cfg.image_format == ImageFormat::png ? ".png" : ".ppm";
    for (std::size_t i = 0; i < std::min(cfg.sample_images, adv.size()); ++i) {
        const AdvSample& s = adv.samples[i];
        Rng rng(cfg.eval_seed, i);
        const PipelineOutput out = defend(p, s.adv, s.adv_pred, rng);
        char stem[32];
        std::snprintf(stem, sizeof stem, "%03zu_", i);
        const std::string base = (dir / stem).string();
        save_image(s.clean, base + "clean" + ext, cfg.image_format);
        save_image(s.adv, base + "adv" + ext, cfg.image_format);
        save_image(out.denoised, base + "denoised" + ext, cfg.image_format);
        save_image(out.heatmap.values, base + "heatmap" + ext, cfg.image_format);
        write_f32_raw(base + "heatmap.f32", out.heatmap.values.data());
        write_image(overlay(out.denoised, out.heatmap), base + "overlay" + rgb_ext, cfg.image_format);
    }
}

void phase_eval(const RunConfig& cfg, const RunPaths& paths, const Logger& log) {
    const Network net = load_classifier(paths.classifier());
    const Pipeline p = load_pipeline(cfg);
    const AdvDataset adv = load_adv_dataset(paths.adv_eval());
    const EvalReport r = evaluate(net, p, adv, cfg.eval_seed);
    emit_report(r, paths.report(), cfg.legacy_labels);
    write_samples(cfg, paths, p, adv);
    say(log, "eval: report written to " + paths.report().string() + ".{txt,json}");
}

}  // namespace

void RunConfig::validate() const {
    for (const fs::path* p : {&train_images, &train_labels, &test_images, &test_labels})
        if (p->empty() || !fs::exists(*p)) throw IoError("config: dataset file '" + p->string() + "' not found");
    if (output_dir.empty()) throw RangeError("config: output-dir is empty");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw RangeError("config: epsilon must lie in [0,1]");
    if (channels < 2 || channels > 16) throw RangeError("config: channels must lie in [2,16]");
    if (batch_size == 0) throw RangeError("config: batch-size must be positive");
    if (eval_count == 0 || ae_train_count == 0) throw RangeError("config: eval-count and ae-train-count must be positive");
    for (double lr : {classifier_lr, switch_lr, upper_lr, ae_lr})
        if (!(lr > 0.0)) throw RangeError("config: learning rates must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw RangeError("config: momentum must lie in [0,1)");
}

RunConfig default_config(const fs::path& data_dir) {
    RunConfig c;
    c.train_images = data_dir / "train-images-idx3-ubyte.gz";
    c.train_labels = data_dir / "train-labels-idx1-ubyte.gz";
    c.test_images = data_dir / "t10k-images-idx3-ubyte.gz";
    c.test_labels = data_dir / "t10k-labels-idx1-ubyte.gz";
    return c;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const Field& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    field(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return field(key).get(cfg); }

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(FormatFault::bad_payload, "config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_config_file(RunConfig& cfg, const fs::path& file) {
    std::ifstream f(file);
    if (!f) throw IoError("cannot open config file " + file.string());
    const std::string text{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    for (const auto& [k, v] : parse_config_text(text)) set_config_value(cfg, k, v);
}

Pipeline load_pipeline(const RunConfig& cfg) {
    const RunPaths paths{cfg.output_dir};
    Pipeline p;
    p.ae = load_autoencoder(paths.autoencoder());
    p.ens = load_ensemble(paths.ensemble());
    p.cam_layer = cfg.cam_layer;
    p.validate();
    return p;
}

void run_phase(const RunConfig& cfg, const std::string& phase, const Logger& log) {
    try {
        cfg.validate();
        const RunPaths paths{cfg.output_dir};
        fs::create_directories(paths.root);
        if (phase == "train-classifier") phase_train_classifier(cfg, paths, log);
        else if (phase == "train-switch") phase_train_switch(cfg, paths, log);
        else if (phase == "attack") phase_attack(cfg, paths, log);
        else if (phase == "train-autoencoder") phase_train_autoencoder(cfg, paths, log);
        else if (phase == "eval") phase_eval(cfg, paths, log);
        else throw RangeError("unknown phase");
    } catch (const PhaseError&) {
        throw;
    } catch (const std::exception& e) {
        throw PhaseError(phase, e.what());
    }
}

EvalReport run_experiment(const RunConfig& cfg, const Logger& log) {
    for (const std::string& phase : kPhases) run_phase(cfg, phase, log);
    return read_report(RunPaths{cfg.output_dir}.report().concat(".json"));
}

}  // namespace advs
