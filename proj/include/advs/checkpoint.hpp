#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "advs/autoencoder.hpp"
#include "advs/network.hpp"
#include "advs/switch_ensemble.hpp"

namespace advs {

// Binary layout (little-endian):
//   "ADVS" | u32 version | u32 len | arch id bytes | u32 tensor count |
//   per tensor: u32 rank | u32 dims[rank] | f32 payload[prod(dims)]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::string arch_id;
    std::vector<Tensor> tensors;
};

void write_checkpoint(const std::filesystem::path& path, const std::string& arch_id,
                      const std::vector<const Tensor*>& tensors);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Only the reference classifier architecture can be reloaded.
void save_classifier(const Network& net, const std::filesystem::path& path);
Network load_classifier(const std::filesystem::path& path);

void save_autoencoder(const AutoEncoder& ae, const std::filesystem::path& path);
AutoEncoder load_autoencoder(const std::filesystem::path& path);

/// Arch id "switch:<sub-model arch>:<channels>:<split>:<seed>".
void save_ensemble(const SwitchEnsemble& ens, const std::filesystem::path& path);
SwitchEnsemble load_ensemble(const std::filesystem::path& path);

}  // namespace advs
