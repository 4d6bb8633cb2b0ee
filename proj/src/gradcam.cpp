#include "advs/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "advs/classifier.hpp"

namespace advs {

Tensor bilinear_resize(const Tensor& map, std::size_t out_h, std::size_t out_w) {
    if (map.rank() != 2) throw ShapeError("bilinear_resize: expected [h,w], got " + shape_str(map.shape()));
    const std::size_t h = map.dim(0), w = map.dim(1);
    Tensor out(Shape{out_h, out_w});
    const auto coord = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
        return n_out == 1 ? 0.0 : double(i) * double(n_in - 1) / double(n_out - 1);
    };
    for (std::size_t y = 0; y < out_h; ++y) {
        const double sy = coord(y, out_h, h);
        const std::size_t y0 = std::min(std::size_t(sy), h - 1), y1 = std::min(y0 + 1, h - 1);
        const double fy = sy - double(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const double sx = coord(x, out_w, w);
            const std::size_t x0 = std::min(std::size_t(sx), w - 1), x1 = std::min(x0 + 1, w - 1);
            const double fx = sx - double(x0);
            const double top = double(map[y0 * w + x0]) * (1 - fx) + double(map[y0 * w + x1]) * fx;
            const double bot = double(map[y1 * w + x0]) * (1 - fx) + double(map[y1 * w + x1]) * fx;
            out[y * out_w + x] = float(top * (1 - fy) + bot * fy);
        }
    }
    return out;
}

CamHeatmap gradcam(const Network& lower, const Network& upper, const Tensor& image, std::size_t class_idx,
                   std::size_t cam_layer, std::size_t channel_used) {
    if (cam_layer >= lower.size() || lower.layer(cam_layer).kind != LayerKind::conv)
        throw RangeError("gradcam: layer " + std::to_string(cam_layer) + " is not a conv layer of the lower body");
    if (class_idx >= upper.output_shape().back())
        throw RangeError("gradcam: class " + std::to_string(class_idx) + " out of range");
    check_unit_range(image, "gradcam input");
    if (image.rank() != 3) throw ShapeError("gradcam: expected [C,H,W] image");

    ComputeGraph<float> g;
    const Trace lo = trace(g, g.input(image, true), lower, false);
    const Trace up = trace(g, lo.output, upper, false);
    const NodeId target = g.pick(up.output, class_idx);
    const auto grads = g.backward(target);

    const NodeId a_node = lo.layer_outputs[cam_layer];
    const Tensor& a = g.value(a_node);
    const Tensor& da = grads.at(a_node);
    const std::size_t k = a.dim(0), plane = a.dim(1) * a.dim(2);

    std::vector<double> raw(plane, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        double alpha = 0;
        for (std::size_t i = 0; i < plane; ++i) alpha += double(da[c * plane + i]);
        alpha /= double(plane);
        for (std::size_t i = 0; i < plane; ++i) raw[i] += alpha * double(a[c * plane + i]);
    }
    Tensor small(Shape{a.dim(1), a.dim(2)});
    for (std::size_t i = 0; i < plane; ++i) small[i] = float(std::max(raw[i], 0.0));

    Tensor map = bilinear_resize(small, image.dim(1), image.dim(2));
    float peak = 0;
    for (float v : map.data()) peak = std::max(peak, v);
    if (peak > 0) {
        // x / x == 1 exactly, so the peak pixel lands on 1.
        for (float& v : map.data()) v = std::clamp(v / peak, 0.0f, 1.0f);
    }
    return CamHeatmap{std::move(map), class_idx, channel_used};
}

Image8 overlay(const Tensor& image, const CamHeatmap& heatmap) {
    const Image8 gray = quantize(image);
    const Tensor& h = heatmap.values;
    if (h.rank() != 2 || h.dim(0) != gray.height || h.dim(1) != gray.width)
        throw ShapeError("overlay: heatmap " + shape_str(h.shape()) + " does not match image " + shape_str(image.shape()));
    Image8 out{gray.width, gray.height, 3, std::vector<std::uint8_t>(gray.width * gray.height * 3)};
    const auto to_byte = [](double v) { return std::uint8_t(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); };
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        const double g = gray.pixels[i];
        const double heat = std::clamp(double(h[i]), 0.0, 1.0);
        out.pixels[3 * i] = to_byte(g + 0.5 * heat * (255.0 - g));
        out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = to_byte(g * (1.0 - 0.5 * heat));
    }
    return out;
}

}  // namespace advs
