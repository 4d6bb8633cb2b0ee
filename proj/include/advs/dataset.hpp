#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "advs/tensor.hpp"

namespace advs {

enum class Split { train, test };

/// Grayscale images [1,H,W] with pixels in [0,1] and labels in [0,10).
struct Dataset {
    std::vector<Tensor> images;
    std::vector<std::uint8_t> labels;
    Split split = Split::train;

    std::size_t size() const noexcept { return images.size(); }
    bool empty() const noexcept { return images.empty(); }

    /// Throws unless sizes agree, labels are in [0,10) and pixels in [0,1].
    void validate() const;
};

/// Reads an IDX image file (magic 2051) and label file (magic 2049); either
/// may be gzip-compressed. Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split = Split::train);

/// Writes IDX files with bytes round(v*255); a ".gz" suffix selects gzip output.
void save_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels);

/// Seeded draw of n samples without replacement. When n >= 50 and the source
/// holds at least five classes, the draw is guaranteed to cover five classes.
Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed);

std::size_t distinct_labels(const Dataset& ds);

}  // namespace advs
