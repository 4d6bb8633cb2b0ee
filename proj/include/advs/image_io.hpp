#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "advs/tensor.hpp"

namespace advs {

enum class ImageFormat { pgm, png };

/// 8-bit image, interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
    std::size_t width = 0, height = 0, channels = 1;
    std::vector<std::uint8_t> pixels;

    friend bool operator==(const Image8&, const Image8&) = default;
};

/// round(v*255) with halves rounded up; accepts [1,H,W] or [H,W] in [0,1].
Image8 quantize(const Tensor& image);
std::uint8_t quantize_value(float v);

/// Writes a grayscale tensor. PGM is binary P5.
void save_image(const Tensor& image, const std::filesystem::path& path, ImageFormat format);

/// Gray images go to P5 or PNG; RGB images go to P6 (for ImageFormat::pgm) or PNG.
void write_image(const Image8& image, const std::filesystem::path& path, ImageFormat format);

/// Reads P5/P6 netpbm and 8-bit non-interlaced gray/RGB PNG.
Image8 read_image(const std::filesystem::path& path);

ImageFormat format_for(const std::filesystem::path& path);

/// Little-endian float32 payload without header.
void write_f32_raw(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32_raw(const std::filesystem::path& path);

}  // namespace advs
