#pragma once

#include <cstdint>
#include <string_view>

#include "advs/dataset.hpp"
#include "advs/network.hpp"
#include "advs/training.hpp"

namespace advs {

inline constexpr std::string_view kClassifierArch = "cnn-ref-v1";
inline constexpr std::size_t kNumClasses = 10;

// Layer indices in the reference classifier:
//   0 conv16 3x3 pad1, 1 relu, 2 maxpool2, 3 conv32 3x3 pad1, 4 relu, 5 maxpool2, 6 flatten, 7 dense10
inline constexpr std::size_t kClassifierSplit = 6;    // lower body = the conv stack [0,6)
inline constexpr std::size_t kClassifierCamLayer = 3; // last conv layer

/// Reference classifier for [1,28,28] inputs, He-uniform initialised from seed.
Network build_classifier(std::uint64_t seed);

/// Minibatch SGD on softmax cross-entropy. final_train_loss is the mean loss
/// over `train` after the last epoch; test_accuracy is measured on `test`.
TrainReport train_classifier(Network& net, const Dataset& train, const Dataset& test, const TrainOptions& opt);

struct Prediction {
    std::size_t label = 0;
    Tensor probs;
};

/// Softmax over logits; the label is argmax(probs) with ties going to the smallest index.
Prediction predict_from_logits(const Tensor& logits);

/// Rejects images with pixels outside [0,1].
Prediction classify(const Network& net, const Tensor& image);

double accuracy(const Network& net, const Dataset& ds);
double mean_loss(const Network& net, const Dataset& ds);

void check_unit_range(const Tensor& image, std::string_view what);

}  // namespace advs
