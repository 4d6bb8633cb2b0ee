#pragma once

#include <cstdint>
#include <string_view>

#include "advs/attack.hpp"
#include "advs/network.hpp"
#include "advs/training.hpp"

namespace advs {

inline constexpr std::string_view kAutoEncoderArch = "ae-ref-v1";
inline constexpr std::size_t kCodeDim = 64;

/// Convolutional encoder down to a dense code, upsampling decoder back to the
/// input shape with a sigmoid output.
struct AutoEncoder {
    Network encoder;  // [1,28,28] -> [code_dim]
    Network decoder;  // [code_dim] -> [1,28,28]
    std::size_t code_dim = 0;

    std::vector<Tensor*> parameters();
};

AutoEncoder build_autoencoder(std::uint64_t seed);

/// Trains decoder(encoder(adv)) toward clean with mse. final_train_loss is the
/// mean reconstruction mse over the pairs after the last epoch.
TrainReport train_autoencoder(AutoEncoder& ae, const AdvDataset& pairs, const TrainOptions& opt);

Tensor denoise(const AutoEncoder& ae, const Tensor& image);

double mse(const Tensor& a, const Tensor& b);

}  // namespace advs
