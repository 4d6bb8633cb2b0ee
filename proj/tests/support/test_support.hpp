#pragma once

#include <filesystem>
#include <string>

#include "advs/dataset.hpp"
#include "advs/rng.hpp"

namespace advs::testing {

inline std::filesystem::path data_dir() { return ADVS_DATA_DIR; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "advs_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Easy synthetic digits: class k lights a 4x4 block at a class-specific
/// position on top of faint noise.
inline Dataset toy_digits(std::size_t n, std::uint64_t seed, Split split = Split::train) {
    Dataset ds;
    ds.split = split;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = i % 10;
        Tensor img(Shape{1, 28, 28});
        for (float& v : img.data()) v = float(rng.uniform(0.0, 0.1));
        const std::size_t y0 = 2 + (k / 5) * 12, x0 = 2 + (k % 5) * 5;
        for (std::size_t y = y0; y < y0 + 4 + k % 3; ++y)
            for (std::size_t x = x0; x < x0 + 4; ++x) img[y * 28 + x] = float(rng.uniform(0.8, 1.0));
        ds.images.push_back(std::move(img));
        ds.labels.push_back(std::uint8_t(k));
    }
    return ds;
}

inline Tensor random_image(std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(Shape{1, 28, 28});
    for (float& v : t.data()) v = float(rng.uniform01());
    return t;
}

}  // namespace advs::testing
