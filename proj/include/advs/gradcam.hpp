#pragma once

#include "advs/image_io.hpp"
#include "advs/network.hpp"

namespace advs {

struct CamHeatmap {
    Tensor values;  // [H,W] of the input image, in [0,1]
    std::size_t class_idx = 0;
    std::size_t channel_used = 0;
};

/// Grad-CAM over layer `cam_layer` of `lower` (must be a conv layer). The
/// feature maps are the conv output before its activation; the target is the
/// logit of `class_idx` produced by lower followed by upper.
CamHeatmap gradcam(const Network& lower, const Network& upper, const Tensor& image, std::size_t class_idx,
                   std::size_t cam_layer, std::size_t channel_used = 0);

/// Corner-aligned bilinear resize of a [h,w] map.
Tensor bilinear_resize(const Tensor& map, std::size_t out_h, std::size_t out_w);

/// Red blend at alpha 0.5: R = g + 0.5*h*(255-g), G = B = g*(1-0.5*h),
/// with g the gray byte and h the heat value.
Image8 overlay(const Tensor& image, const CamHeatmap& heatmap);

}  // namespace advs
