#include <fstream>
#include <sstream>

#include "advs/checkpoint.hpp"
#include "advs/experiment.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace advs;
using namespace advs::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig tiny(const fs::path& out) {
    RunConfig c = default_config(data_dir());
    c.output_dir = out;
    c.channels = 2;
    c.classifier_epochs = c.switch_epochs = c.upper_epochs = c.ae_epochs = 1;
    c.train_limit = 300;
    c.eval_count = 8;
    c.ae_train_count = 40;
    c.sample_images = 2;
    return c;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("flat config files and overrides") {
    RunConfig c = default_config(data_dir());
    const auto kv = parse_config_text("# comment\nepsilon = 0.1\n\nchannels=3  # trailing\nae_epochs = 2\n");
    CHECK(kv.size() == 3);
    CHECK(kv.at("ae-epochs") == "2");
    for (const auto& [k, v] : kv) set_config_value(c, k, v);
    CHECK(c.epsilon == 0.1);
    CHECK(c.channels == 3);
    CHECK(c.ae_epochs == 2);
    CHECK_THROWS_AS(set_config_value(c, "no-such-key", "1"), RangeError);
    CHECK_THROWS_AS(set_config_value(c, "channels", "-2"), RangeError);
    CHECK_THROWS_AS(set_config_value(c, "channels", "two"), RangeError);
    CHECK_THROWS_AS(set_config_value(c, "reuse", "maybe"), RangeError);
    CHECK_THROWS_AS(parse_config_text("just words"), FormatError);
    for (const std::string& k : config_keys()) {
        RunConfig copy = c;
        set_config_value(copy, k, get_config_value(c, k));
        CHECK(get_config_value(copy, k) == get_config_value(c, k));
    }
    set_config_value(c, "channels", "1");
    CHECK_THROWS_AS(c.validate(), RangeError);
    c = default_config(data_dir() / "nowhere");
    CHECK_THROWS_AS(c.validate(), IoError);
}

TEST_CASE("phase failures are tagged") {
    const auto dir = scratch_dir("exp_fail");
    RunConfig c = tiny(dir);
    try {
        run_phase(c, "eval");
        FAIL("eval without checkpoints should fail");
    } catch (const PhaseError& e) {
        CHECK(e.phase() == "eval");
        CHECK(std::string(e.what()).rfind("[eval] ", 0) == 0);
    }
    c.train_images = dir / "absent.gz";
    CHECK_THROWS_AS(run_phase(c, "train-classifier"), PhaseError);
}

TEST_CASE("small end-to-end run is reproducible and reusable") {
    const auto a = scratch_dir("exp_a"), b = scratch_dir("exp_b");
    const EvalReport ra = run_experiment(tiny(a));
    CHECK_NOTHROW(ra.validate());
    CHECK(ra.attack_success_count + ra.attack_fail_count == 8);
    CHECK(ra.n_channels == 2);
    for (const char* f : {"classifier.ckpt", "submodel_0.ckpt", "submodel_1.ckpt", "ensemble.ckpt", "autoencoder.ckpt",
                          "report.txt", "report.json", "adv_eval/manifest.json", "adv_ae_train/manifest.json",
                          "samples/000_clean.png", "samples/000_adv.png", "samples/000_denoised.png",
                          "samples/000_heatmap.png", "samples/000_overlay.png", "samples/001_heatmap.f32"})
        CHECK_MESSAGE(fs::exists(a / f), f);
    CHECK(load_adv_dataset(a / "adv_eval").size() == 8);

    const EvalReport rb = run_experiment(tiny(b));
    CHECK(rb == ra);
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));

    // Re-running only the evaluation from checkpoints gives the same report.
    fs::remove(b / "report.json");
    fs::remove(b / "report.txt");
    run_phase(tiny(b), "eval");
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));

    // With reuse, nothing is retrained: checkpoints keep their bytes.
    const std::string ckpt = slurp(a / "ensemble.ckpt");
    const auto stamp = fs::last_write_time(a / "classifier.ckpt");
    RunConfig again = tiny(a);
    again.reuse = true;
    const EvalReport rc = run_experiment(again);
    CHECK(rc == ra);
    CHECK(fs::last_write_time(a / "classifier.ckpt") == stamp);
    CHECK(slurp(a / "ensemble.ckpt") == ckpt);
}

}
