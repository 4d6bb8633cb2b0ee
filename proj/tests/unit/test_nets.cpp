#include <cmath>

#include "advs/autoencoder.hpp"
#include "advs/switch_ensemble.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace advs;
using namespace advs::testing;

TEST_SUITE("nets") {

TEST_CASE("reference classifier layout") {
    const Network net = build_classifier(1);
    CHECK(net.arch_id() == kClassifierArch);
    CHECK(net.input_shape() == Shape{1, 28, 28});
    CHECK(net.output_shape() == Shape{10});
    CHECK(net.parameter_count() == 160 + 4640 + 15690);
    CHECK(net.layer(kClassifierCamLayer).kind == LayerKind::conv);
    CHECK(net.shape_at(kClassifierSplit) == Shape{32, 7, 7});
}

TEST_CASE("layer chaining is validated") {
    CHECK_THROWS_AS(Network("bad", {1, 28, 28}, {Layer::conv(2, 4, 3, 1)}), ShapeError);
    CHECK_THROWS_AS(Network("bad", {1, 5, 5}, {Layer::maxpool2()}), ShapeError);
    CHECK_THROWS_AS(Network("bad", {1, 4, 4}, {Layer::flatten(), Layer::dense(15, 2)}), ShapeError);
    CHECK_NOTHROW(Network("ok", {1, 4, 4}, {Layer::flatten(), Layer::dense(16, 2)}));
}

TEST_CASE("initialisation is seeded and He-uniform bounded") {
    const Network a = build_classifier(5), b = build_classifier(5), c = build_classifier(6);
    CHECK(parameters_equal(a, b));
    CHECK_FALSE(parameters_equal(a, c));
    CHECK(fingerprint(a) == fingerprint(b));
    CHECK(fingerprint(a) != fingerprint(c));
    const Tensor& w = *a.parameters()[0];
    const float bound = float(std::sqrt(6.0 / 9.0));
    for (float v : w.data()) CHECK(std::abs(v) <= bound);
    for (float v : a.parameters()[1]->data()) CHECK(v == 0.0f);
}

TEST_CASE("prediction ties go to the smallest index") {
    const Prediction p = predict_from_logits(Tensor({4}, {1, 3, 3, 0}));
    CHECK(p.label == 1);
    float sum = 0;
    for (float v : p.probs.data()) sum += v;
    CHECK(sum == doctest::Approx(1.0f));
}

TEST_CASE("classify rejects pixels outside [0,1]") {
    const Network net = build_classifier(1);
    Tensor img(Shape{1, 28, 28}, 0.5f);
    CHECK(classify(net, img).label < 10);
    img[3] = 1.5f;
    CHECK_THROWS_AS(classify(net, img), RangeError);
    CHECK_THROWS_AS(classify(net, Tensor(Shape{1, 27, 28})), ShapeError);
}

TEST_CASE("training learns an easy synthetic task") {
    const Dataset train = toy_digits(200, 1), test = toy_digits(100, 2, Split::test);
    Network net = build_classifier(3);
    TrainOptions o;
    o.epochs = 3;
    o.seed = 3;
    o.batch_size = 10;
    std::vector<double> losses;
    o.on_epoch = [&](std::size_t, double l) { losses.push_back(l); };
    const TrainReport r = train_classifier(net, train, test, o);
    REQUIRE(losses.size() == 3);
    CHECK(losses.back() < losses.front());
    CHECK(*r.test_accuracy >= 0.9);
    CHECK(r.final_train_loss == doctest::Approx(mean_loss(net, train)));
}

TEST_CASE("training is bitwise reproducible") {
    const Dataset train = toy_digits(60, 4), test = toy_digits(20, 5, Split::test);
    TrainOptions o;
    o.epochs = 1;
    o.seed = 9;
    Network a = build_classifier(2), b = build_classifier(2);
    train_classifier(a, train, test, o);
    train_classifier(b, train, test, o);
    CHECK(parameters_equal(a, b));
}

TEST_CASE("block switching assembly") {
    const Dataset train = toy_digits(100, 6), test = toy_digits(50, 7, Split::test);
    TrainOptions o;
    o.epochs = 1;
    o.batch_size = 10;
    CHECK_THROWS_AS(train_switch_level1(train, test, 1, 10, o), RangeError);
    std::vector<TrainReport> reports;
    const std::vector<Network> subs = train_switch_level1(train, test, 3, 10, o, &reports);
    REQUIRE(subs.size() == 3);
    CHECK(reports.size() == 3);
    CHECK(reports[2].seed == 12);
    CHECK_FALSE(parameters_equal(subs[0], subs[1]));

    CHECK_THROWS_AS(assemble_switch(subs, 0, 1), RangeError);
    CHECK_THROWS_AS(assemble_switch(subs, subs[0].size(), 1), RangeError);
    SwitchEnsemble ens = assemble_switch(subs, kClassifierSplit, 77);
    REQUIRE(ens.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const std::vector<const Tensor*> lower = std::as_const(ens.channels[k]).parameters();
        const std::vector<const Tensor*> full = std::as_const(subs[k]).parameters();
        REQUIRE(lower.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) CHECK(bitwise_equal(*lower[i], *full[i]));
        CHECK(ens.channels[k].output_shape() == ens.upper.input_shape());
    }
    // The upper body is re-initialised, not copied from a sub-model.
    CHECK_FALSE(bitwise_equal(*std::as_const(ens.upper).parameters()[0], *std::as_const(subs[0]).parameters()[4]));

    const std::vector<Network> before = ens.channels;
    o.seed = 4;
    const TrainReport r = train_switch_level2(ens, train, test, o);
    CHECK(r.test_accuracy.has_value());
    for (std::size_t k = 0; k < 3; ++k) CHECK(parameters_equal(before[k], ens.channels[k]));

    Rng rng(1);
    std::vector<std::size_t> counts(3);
    for (int i = 0; i < 600; ++i) counts[switch_classify(ens, test.images[i % 50], rng).channel]++;
    for (std::size_t c : counts) CHECK(c > 150);

    Rng r1(42), r2(42);
    const SwitchPrediction p1 = switch_classify(ens, test.images[0], r1), p2 = switch_classify(ens, test.images[0], r2);
    CHECK(p1.channel == p2.channel);
    CHECK(bitwise_equal(p1.probs, p2.probs));
    CHECK_THROWS_AS(ens.logits(test.images[0], 3), RangeError);
}

TEST_CASE("mismatched sub-model architectures are rejected") {
    const Network a = build_classifier(1);
    const Network b("other", {1, 28, 28}, {Layer::conv(1, 4, 3, 1), Layer::relu(), Layer::flatten(), Layer::dense(3136, 10)});
    CHECK_THROWS_AS(assemble_switch({a, b}, 2, 0), ShapeError);
}

TEST_CASE("auto-encoder shapes and training") {
    AutoEncoder ae = build_autoencoder(3);
    CHECK(ae.encoder.output_shape() == Shape{kCodeDim});
    CHECK(ae.decoder.output_shape() == Shape{1, 28, 28});
    const Tensor out = denoise(ae, random_image(1));
    CHECK(out.shape() == Shape{1, 28, 28});
    for (float v : out.data()) CHECK((v >= 0.0f && v <= 1.0f));

    const Dataset clean = toy_digits(60, 8);
    AdvDataset pairs;
    Rng rng(5);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        AdvSample s;
        s.clean = clean.images[i];
        s.adv = clean.images[i];
        for (float& v : s.adv.data()) v = std::clamp(v + float(rng.uniform(-0.1, 0.1)), 0.0f, 1.0f);
        s.true_label = s.clean_pred = s.adv_pred = clean.labels[i];
        pairs.samples.push_back(std::move(s));
    }
    double before = 0;
    for (const AdvSample& s : pairs.samples) before += mse(denoise(ae, s.adv), s.clean);
    before /= double(pairs.size());
    TrainOptions o;
    o.epochs = 4;
    o.lr = 0.05;
    o.batch_size = 10;
    const TrainReport r = train_autoencoder(ae, pairs, o);
    CHECK_FALSE(r.test_accuracy.has_value());
    CHECK(r.final_train_loss < before);
    CHECK(mse(Tensor({2}, {0, 1}), Tensor({2}, {1, 1})) == 0.5);
}

TEST_CASE("zero epochs leave parameters untouched") {
    const Dataset train = toy_digits(40, 11), test = toy_digits(20, 12, Split::test);
    TrainOptions o;
    o.epochs = 0;
    Network net = build_classifier(8);
    const Network before = net;
    const TrainReport r = train_classifier(net, train, test, o);
    CHECK(parameters_equal(net, before));
    CHECK(*r.test_accuracy == accuracy(before, test));

    SwitchEnsemble ens = assemble_switch({build_classifier(1), build_classifier(2)}, kClassifierSplit, 3);
    const Network upper = ens.upper;
    train_switch_level2(ens, train, test, o);
    CHECK(parameters_equal(upper, ens.upper));

    AutoEncoder ae = build_autoencoder(4);
    const AutoEncoder ae0 = ae;
    AdvDataset pairs;
    pairs.samples.push_back({train.images[0], train.images[0], 0, 0, 0});
    train_autoencoder(ae, pairs, o);
    CHECK(parameters_equal(ae.encoder, ae0.encoder));
    CHECK(parameters_equal(ae.decoder, ae0.decoder));
}

TEST_CASE("untrained net gives finite logits on a blank image") {
    const Tensor z = forward(build_classifier(21), Tensor(Shape{1, 28, 28}));
    CHECK(z.shape() == Shape{10});
    CHECK(z.all_finite());
}

TEST_CASE("swapping two logits swaps their probabilities") {
    const Tensor z = forward(build_classifier(22), random_image(3));
    Tensor w = z;
    std::swap(w[2], w[7]);
    const Prediction a = predict_from_logits(z), b = predict_from_logits(w);
    CHECK(a.probs[2] == b.probs[7]);
    CHECK(a.probs[7] == b.probs[2]);
    CHECK((a.probs[2] < a.probs[7]) == (b.probs[7] < b.probs[2]));
}

TEST_CASE("a channel is the truncated sub-model") {
    const std::vector<Network> subs{build_classifier(31), build_classifier(32)};
    const SwitchEnsemble ens = assemble_switch(subs, kClassifierSplit, 5);
    const Tensor img = random_image(9);
    for (std::size_t k = 0; k < 2; ++k) {
        const Tensor a = forward(ens.channels[k], img);
        const Tensor b = forward(subs[k].slice(0, kClassifierSplit, "lower"), img);
        CHECK(bitwise_equal(a, b));
        CHECK(bitwise_equal(ens.logits(img, k), forward(ens.upper, a)));
    }
}

TEST_CASE("single-channel ensemble is the composed model") {
    const Network sub = build_classifier(41);
    const SwitchEnsemble ens = assemble_switch({sub}, kClassifierSplit, 6);
    Rng r1(1), r2(999);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Tensor img = random_image(100 + s);
        const Tensor composed = forward(ens.upper, forward(sub.slice(0, kClassifierSplit, "lower"), img));
        const SwitchPrediction p = switch_classify(ens, img, s % 2 ? r1 : r2);
        CHECK(p.channel == 0);
        CHECK(bitwise_equal(p.probs, predict_from_logits(composed).probs));
    }
}

TEST_CASE("auto-encoder learns the identity on clean pairs") {
    const Dataset clean = toy_digits(50, 13);
    AdvDataset pairs;
    for (std::size_t i = 0; i < clean.size(); ++i)
        pairs.samples.push_back({clean.images[i], clean.images[i], clean.labels[i], clean.labels[i], clean.labels[i]});
    AutoEncoder ae = build_autoencoder(14);
    TrainOptions o;
    o.epochs = 6;
    o.lr = 0.003;
    o.optimizer = OptimizerKind::adam;
    o.batch_size = 10;
    std::vector<double> losses;
    o.on_epoch = [&](std::size_t, double l) { losses.push_back(l); };
    train_autoencoder(ae, pairs, o);
    REQUIRE(losses.size() == 6);
    CHECK(losses.back() < 0.5 * losses.front());
    CHECK(losses[3] + losses[4] + losses[5] < losses[0] + losses[1] + losses[2]);
}

}
