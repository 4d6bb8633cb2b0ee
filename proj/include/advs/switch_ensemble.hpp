#pragma once

#include <cstdint>
#include <vector>

#include "advs/classifier.hpp"
#include "advs/rng.hpp"

namespace advs {

/// Block-switching ensemble: N lower bodies (conv stacks of independently
/// trained sub-models) as parallel channels under one shared upper body.
struct SwitchEnsemble {
    std::vector<Network> channels;
    Network upper;
    std::size_t split_index = 0;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return channels.size(); }
    bool assembled() const noexcept { return !channels.empty() && !upper.empty(); }

    /// lower[channel] followed by the shared upper body.
    Tensor logits(const Tensor& image, std::size_t channel) const;
};

/// N >= 2 sub-models with seeds base_seed .. base_seed+N-1 (initialisation and
/// minibatch order). Reports are appended to `reports` when given.
std::vector<Network> train_switch_level1(const Dataset& train, const Dataset& test, std::size_t n,
                                         std::uint64_t base_seed, const TrainOptions& opt,
                                         std::vector<TrainReport>* reports = nullptr);

/// Keeps layers [0, split_index) of every sub-model as a channel, discards the
/// upper bodies and installs a fresh upper body initialised from `seed`.
/// A single sub-model is accepted (useful for tests).
SwitchEnsemble assemble_switch(const std::vector<Network>& submodels, std::size_t split_index, std::uint64_t seed);

/// Trains only the shared upper body; each minibatch runs through one channel
/// drawn uniformly at random. Channel parameters are never written.
TrainReport train_switch_level2(SwitchEnsemble& ens, const Dataset& train, const Dataset& test,
                                const TrainOptions& opt);

struct SwitchPrediction {
    std::size_t label = 0;
    Tensor probs;
    std::size_t channel = 0;
};

/// Draws a channel uniformly from rng and classifies through it.
SwitchPrediction switch_classify(const SwitchEnsemble& ens, const Tensor& image, Rng& rng);

/// Accuracy with per-sample channel streams derived from (seed, index).
double ensemble_accuracy(const SwitchEnsemble& ens, const Dataset& ds, std::uint64_t seed);

/// Accuracy of one fixed channel.
double channel_accuracy(const SwitchEnsemble& ens, std::size_t channel, const Dataset& ds);

}  // namespace advs
