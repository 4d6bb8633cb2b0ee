#pragma once

#include <cstdint>
#include <functional>
#include <optional>

namespace advs {

enum class OptimizerKind { sgd, adam };

struct TrainOptions {
    std::size_t epochs = 5;
    double lr = 0.01;
    double momentum = 0.9;  // sgd only
    OptimizerKind optimizer = OptimizerKind::sgd;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;  // minibatch order (and channel draws for level-2 training)
    std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
};

struct TrainReport {
    std::size_t epochs = 0;
    double final_train_loss = 0.0;
    std::optional<double> test_accuracy;  // absent for the auto-encoder
    std::uint64_t seed = 0;
};

}  // namespace advs
