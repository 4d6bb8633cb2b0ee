#include <cmath>
#include <fstream>

#include "advs/attack.hpp"
#include "advs/classifier.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"

using namespace advs;
using namespace advs::testing;

namespace {

// logits = [-x, x]: the loss for label 0 grows with x.
Network linear_toy() {
    Network net("toy", {1, 1, 1}, {Layer::flatten(), Layer::dense(1, 2)});
    Tensor& w = *net.parameters()[0];
    w[0] = -1.0f;
    w[1] = 1.0f;
    return net;
}

AdvSample sample(std::size_t label, std::size_t clean_pred, std::size_t adv_pred) {
    AdvSample s;
    s.clean = Tensor(Shape{1, 2, 2}, 0.5f);
    s.adv = s.clean;
    s.true_label = label;
    s.clean_pred = clean_pred;
    s.adv_pred = adv_pred;
    return s;
}

const Network& toy_model() {
    static const Network net = [] {
        Network n = build_classifier(21);
        TrainOptions o;
        o.epochs = 2;
        o.batch_size = 10;
        o.seed = 21;
        train_classifier(n, toy_digits(200, 31), toy_digits(50, 32, Split::test), o);
        return n;
    }();
    return net;
}

}  // namespace

TEST_SUITE("attack") {

TEST_CASE("linear toy: one signed step") {
    const Network net = linear_toy();
    AttackConfig cfg;
    cfg.epsilon = 0.1;
    const Tensor adv = fgsm(net, Tensor({1, 1, 1}, {0.5f}), 0, cfg);
    CHECK(adv[0] == 0.6f);
}

TEST_CASE("upper clip") {
    const Network net = linear_toy();
    AttackConfig cfg;
    cfg.epsilon = 0.1;
    CHECK(fgsm(net, Tensor({1, 1, 1}, {0.95f}), 0, cfg)[0] == 1.0f);
    // Label 1 pushes x down instead.
    CHECK(fgsm(net, Tensor({1, 1, 1}, {0.05f}), 1, cfg)[0] == 0.0f);
}

TEST_CASE("zero gradient leaves the pixel untouched") {
    Network net = linear_toy();
    net.parameters()[0]->fill(0.0f);
    AttackConfig cfg;
    CHECK(fgsm(net, Tensor({1, 1, 1}, {0.3f}), 0, cfg)[0] == 0.3f);
}

TEST_CASE("config and argument validation") {
    AttackConfig cfg;
    cfg.epsilon = -0.1;
    CHECK_THROWS_AS(cfg.validate(), RangeError);
    cfg.epsilon = 1.5;
    CHECK_THROWS_AS(cfg.validate(), RangeError);
    cfg = AttackConfig{};
    cfg.clip_lo = 1.0;
    CHECK_THROWS_AS(cfg.validate(), RangeError);
    const Network net = linear_toy();
    CHECK_THROWS_AS(fgsm(net, Tensor({1, 1, 1}, {0.5f}), 2, AttackConfig{}), RangeError);
    CHECK_THROWS_AS(fgsm(net, Tensor({1, 1, 1}, {1.5f}), 0, AttackConfig{}), RangeError);
    CHECK_THROWS_AS(build_adv_dataset(net, Dataset{}, AttackConfig{}), RangeError);
}

TEST_CASE("epsilon zero reproduces inputs and predictions") {
    const Network& net = toy_model();
    const Dataset data = toy_digits(20, 40, Split::test);
    AttackConfig cfg;
    cfg.epsilon = 0.0;
    const AdvDataset ds = build_adv_dataset(net, data, cfg);
    REQUIRE(ds.size() == data.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(bitwise_equal(ds.samples[i].adv, data.images[i]));
        CHECK(ds.samples[i].adv_pred == ds.samples[i].clean_pred);
        CHECK(ds.samples[i].true_label == data.labels[i]);
    }
    CHECK(attack_success_rate(ds) == 0.0);
}

TEST_CASE("perturbation is bounded, signed and pure") {
    const Network& net = toy_model();
    const std::string before = fingerprint(net);
    const Dataset data = toy_digits(30, 41, Split::test);
    AttackConfig cfg;
    cfg.epsilon = 0.2;
    const AdvDataset ds = build_adv_dataset(net, data, cfg);
    CHECK_NOTHROW(ds.validate());
    for (const AdvSample& s : ds.samples)
        for (std::size_t p = 0; p < s.adv.size(); ++p) {
            const float a = s.adv[p], c = s.clean[p];
            const double d = std::abs(double(a) - double(c));
            CHECK(d <= 0.2 + 1e-6);
            if (a != 0.0f && a != 1.0f) CHECK((d < 1e-6 || std::abs(d - 0.2) < 1e-6));
        }
    CHECK(fingerprint(net) == before);
    const AdvDataset again = build_adv_dataset(net, data, cfg);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(bitwise_equal(ds.samples[i].adv, again.samples[i].adv));
}

TEST_CASE("success rate does not decrease with epsilon") {
    const Network& net = toy_model();
    const Dataset data = toy_digits(100, 42, Split::test);
    double last = -1;
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.3}) {
        AttackConfig cfg;
        cfg.epsilon = eps;
        const double rate = attack_success_rate(build_adv_dataset(net, data, cfg));
        CAPTURE(eps);
        CHECK(rate >= last);
        last = rate;
    }
    CHECK(last > 0.0);
}

TEST_CASE("success rate counts flips among clean-correct samples") {
    AdvDataset ds;
    ds.samples = {sample(1, 1, 2), sample(2, 2, 3), sample(3, 3, 3), sample(4, 4, 0), sample(5, 6, 6)};
    CHECK(attack_success_rate(ds) == 0.75);
    AdvDataset none;
    none.samples = {sample(1, 2, 2)};
    CHECK_THROWS_AS(attack_success_rate(none), RangeError);
    CHECK_THROWS_AS(attack_success_rate(AdvDataset{}), RangeError);
}

TEST_CASE("directory round trip and validation on load") {
    const Network& net = toy_model();
    AttackConfig cfg;
    cfg.epsilon = 0.15;
    const AdvDataset ds = build_adv_dataset(net, toy_digits(5, 43, Split::test), cfg);
    const auto dir = scratch_dir("adv_roundtrip");
    save_adv_dataset(ds, dir);
    const AdvDataset back = load_adv_dataset(dir);
    REQUIRE(back.size() == ds.size());
    CHECK(back.source_model_id == ds.source_model_id);
    CHECK(back.config.epsilon == cfg.epsilon);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(bitwise_equal(back.samples[i].clean, ds.samples[i].clean));
        CHECK(bitwise_equal(back.samples[i].adv, ds.samples[i].adv));
        CHECK(back.samples[i].adv_pred == ds.samples[i].adv_pred);
    }

    // Shrinking epsilon in the manifest breaks the L-inf invariant.
    nlohmann::json j;
    std::ifstream(dir / "manifest.json") >> j;
    j["config"]["epsilon"] = 0.01;
    std::ofstream(dir / "manifest.json") << j.dump();
    CHECK_THROWS_AS(load_adv_dataset(dir), RangeError);
    CHECK_THROWS_AS(load_adv_dataset(dir / "missing"), IoError);
}

}
