#include "advs/switch_ensemble.hpp"

#include <string>

#include "train_loop.hpp"

namespace advs {

namespace {

void check_channel(const SwitchEnsemble& ens, std::size_t channel) {
    if (!ens.assembled()) throw Error("switch ensemble is not assembled");
    if (channel >= ens.size())
        throw RangeError("channel " + std::to_string(channel) + " outside [0," + std::to_string(ens.size()) + ")");
}

}  // namespace

Tensor SwitchEnsemble::logits(const Tensor& image, std::size_t channel) const {
    check_channel(*this, channel);
    ComputeGraph<float> g;
    const Trace lower = trace(g, g.input(image), channels[channel], false);
    return g.value(trace(g, lower.output, upper, false).output);
}

std::vector<Network> train_switch_level1(const Dataset& train, const Dataset& test, std::size_t n,
                                         std::uint64_t base_seed, const TrainOptions& opt,
                                         std::vector<TrainReport>* reports) {
    if (n < 2) throw RangeError("train_switch_level1: need at least 2 sub-models, got " + std::to_string(n));
    std::vector<Network> models;
    models.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Network net = build_classifier(base_seed + k);
        TrainOptions o = opt;
        o.seed = base_seed + k;
        TrainReport r = train_classifier(net, train, test, o);
        if (reports) reports->push_back(r);
        models.push_back(std::move(net));
    }
    return models;
}

SwitchEnsemble assemble_switch(const std::vector<Network>& submodels, std::size_t split_index, std::uint64_t seed) {
    if (submodels.empty()) throw RangeError("assemble_switch: no sub-models");
    const Network& ref = submodels.front();
    for (std::size_t k = 1; k < submodels.size(); ++k)
        if (!same_architecture(ref, submodels[k]) || submodels[k].arch_id() != ref.arch_id())
            throw ShapeError("assemble_switch: sub-model " + std::to_string(k) + " has a different architecture");
    if (split_index == 0 || split_index >= ref.size())
        throw RangeError("assemble_switch: split index " + std::to_string(split_index) + " is not an interior boundary");

    SwitchEnsemble ens;
    ens.split_index = split_index;
    ens.seed = seed;
    for (std::size_t k = 0; k < submodels.size(); ++k)
        ens.channels.push_back(submodels[k].slice(0, split_index, ref.arch_id() + "/lower"));
    ens.upper = ref.slice(split_index, ref.size(), ref.arch_id() + "/upper");
    ens.upper.init(seed);
    return ens;
}

TrainReport train_switch_level2(SwitchEnsemble& ens, const Dataset& train, const Dataset& test,
                                const TrainOptions& opt) {
    if (!ens.assembled()) throw Error("train_switch_level2: ensemble is not assembled");
    if (train.empty() || test.empty()) throw RangeError("train_switch_level2: empty dataset");
    train.validate();

    Rng channel_rng(opt.seed, 1);
    std::size_t channel = 0;
    detail::run_minibatch(
        ens.upper.parameters(), train.size(), opt,
        [&](std::size_t idx, std::vector<Tensor>& acc) {
            ComputeGraph<float> g;
            const Trace lower = trace(g, g.input(train.images[idx]), ens.channels[channel], false);
            const Trace up = trace(g, lower.output, ens.upper, true);
            const NodeId loss = g.softmax_cross_entropy(up.output, train.labels[idx]);
            const auto grads = g.backward(loss);
            for (std::size_t k = 0; k < up.params.size(); ++k) detail::add_into(acc[k], grads.at(up.params[k]));
            return double(g.scalar(loss));
        },
        [&](std::size_t) { channel = std::size_t(channel_rng.below(ens.size())); });

    TrainReport r;
    r.epochs = opt.epochs;
    r.seed = opt.seed;
    double loss = 0.0;
    Rng eval_rng(opt.seed, 2);
    for (std::size_t i = 0; i < train.size(); ++i) {
        ComputeGraph<float> g;
        const NodeId logits = g.input(ens.logits(train.images[i], std::size_t(eval_rng.below(ens.size()))));
        loss += g.scalar(g.softmax_cross_entropy(logits, train.labels[i]));
    }
    r.final_train_loss = loss / double(train.size());
    r.test_accuracy = ensemble_accuracy(ens, test, opt.seed);
    return r;
}

SwitchPrediction switch_classify(const SwitchEnsemble& ens, const Tensor& image, Rng& rng) {
    if (!ens.assembled()) throw Error("switch_classify: ensemble is not assembled");
    check_unit_range(image, "switch_classify");
    SwitchPrediction out;
    out.channel = std::size_t(rng.below(ens.size()));
    Prediction p = predict_from_logits(ens.logits(image, out.channel));
    out.label = p.label;
    out.probs = std::move(p.probs);
    return out;
}

double ensemble_accuracy(const SwitchEnsemble& ens, const Dataset& ds, std::uint64_t seed) {
    if (ds.empty()) throw RangeError("ensemble_accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Rng rng(seed, i);
        correct += switch_classify(ens, ds.images[i], rng).label == ds.labels[i];
    }
    return double(correct) / double(ds.size());
}

double channel_accuracy(const SwitchEnsemble& ens, std::size_t channel, const Dataset& ds) {
    if (ds.empty()) throw RangeError("channel_accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        correct += predict_from_logits(ens.logits(ds.images[i], channel)).label == ds.labels[i];
    return double(correct) / double(ds.size());
}

}  // namespace advs
