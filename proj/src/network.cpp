#include "advs/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "advs/rng.hpp"

namespace advs {

std::string_view to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::upsample2: return "upsample2";
    case LayerKind::flatten: return "flatten";
    case LayerKind::reshape: return "reshape";
    case LayerKind::dense: return "dense";
    }
    return "?";
}

Layer Layer::conv(std::size_t in_channels, std::size_t out_channels, std::size_t k, std::size_t pad,
                  std::size_t stride) {
    Layer l = of(LayerKind::conv);
    l.weight = Tensor(Shape{out_channels, in_channels, k, k});
    l.bias = Tensor(Shape{out_channels});
    l.pad = pad;
    l.stride = stride;
    return l;
}

Layer Layer::dense(std::size_t in, std::size_t out) {
    Layer l = of(LayerKind::dense);
    l.weight = Tensor(Shape{out, in});
    l.bias = Tensor(Shape{out});
    return l;
}

Layer Layer::reshape(Shape target) {
    Layer l = of(LayerKind::reshape);
    l.target = std::move(target);
    return l;
}

namespace {

Shape infer(const Layer& l, const Shape& in, std::size_t index) {
    auto bad = [&](const std::string& msg) {
        return ShapeError("layer " + std::to_string(index) + " (" + std::string(to_string(l.kind)) + "): " + msg);
    };
    switch (l.kind) {
    case LayerKind::conv: {
        if (in.size() != 3) throw bad("expects [C,H,W], got " + shape_str(in));
        const Shape& k = l.weight.shape();
        if (k.size() != 4 || k[1] != in[0]) throw bad("kernel " + shape_str(k) + " vs input " + shape_str(in));
        if (l.bias.shape() != Shape{k[0]}) throw bad("bias " + shape_str(l.bias.shape()));
        if (l.stride == 0 || in[1] + 2 * l.pad < k[2] || in[2] + 2 * l.pad < k[3])
            throw bad("kernel does not fit input " + shape_str(in));
        return {k[0], (in[1] + 2 * l.pad - k[2]) / l.stride + 1, (in[2] + 2 * l.pad - k[3]) / l.stride + 1};
    }
    case LayerKind::relu:
    case LayerKind::sigmoid:
        return in;
    case LayerKind::maxpool2:
        if (in.size() != 3 || in[1] % 2 || in[2] % 2) throw bad("expects [C,H,W] with even H,W, got " + shape_str(in));
        return {in[0], in[1] / 2, in[2] / 2};
    case LayerKind::upsample2:
        if (in.size() != 3) throw bad("expects [C,H,W], got " + shape_str(in));
        return {in[0], in[1] * 2, in[2] * 2};
    case LayerKind::flatten:
        return {shape_size(in)};
    case LayerKind::reshape:
        if (l.target.empty() || shape_size(l.target) != shape_size(in))
            throw bad("cannot reshape " + shape_str(in) + " to " + shape_str(l.target));
        return l.target;
    case LayerKind::dense: {
        const Shape& w = l.weight.shape();
        if (in.size() != 1 || w.size() != 2 || w[1] != in[0])
            throw bad("weight " + shape_str(w) + " vs input " + shape_str(in));
        if (l.bias.shape() != Shape{w[0]}) throw bad("bias " + shape_str(l.bias.shape()));
        return {w[0]};
    }
    }
    throw bad("unknown layer kind");
}

}  // namespace

Network::Network(std::string arch_id, Shape input_shape, std::vector<Layer> layers)
    : arch_id_(std::move(arch_id)), layers_(std::move(layers)) {
    if (input_shape.empty()) throw ShapeError("network input shape must be non-empty");
    shapes_.clear();
    shapes_.push_back(std::move(input_shape));
    for (std::size_t i = 0; i < layers_.size(); ++i) shapes_.push_back(infer(layers_[i], shapes_.back(), i));
}

std::vector<Tensor*> Network::parameters() {
    std::vector<Tensor*> out;
    for (Layer& l : layers_)
        if (l.has_params()) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
    return out;
}

std::vector<const Tensor*> Network::parameters() const {
    std::vector<const Tensor*> out;
    for (const Layer& l : layers_)
        if (l.has_params()) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
    return out;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* p : parameters()) n += p->size();
    return n;
}

Network Network::slice(std::size_t begin, std::size_t end, std::string arch_id) const {
    if (begin > end || end > layers_.size())
        throw RangeError("slice [" + std::to_string(begin) + "," + std::to_string(end) + ") outside network of " +
                         std::to_string(layers_.size()) + " layers");
    return Network(std::move(arch_id), shapes_[begin],
                   std::vector<Layer>(layers_.begin() + std::ptrdiff_t(begin), layers_.begin() + std::ptrdiff_t(end)));
}

void Network::init(std::uint64_t seed) {
    Rng rng(seed);
    for (Layer& l : layers_) {
        if (!l.has_params()) continue;
        const std::size_t fan_in = l.weight.size() / l.weight.dim(0);
        const double limit = std::sqrt(6.0 / double(fan_in));
        for (float& w : l.weight.data()) w = float(rng.uniform(-limit, limit));
        l.bias.fill(0.0f);
    }
}

Trace trace(ComputeGraph<float>& g, NodeId x, const Network& net, bool trainable) {
    if (g.value(x).shape() != net.input_shape())
        throw ShapeError("network '" + net.arch_id() + "' expects input " + shape_str(net.input_shape()) + ", got " +
                         shape_str(g.value(x).shape()));
    Trace t;
    t.layer_outputs.reserve(net.size());
    NodeId cur = x;
    for (const Layer& l : net.layers()) {
        switch (l.kind) {
        case LayerKind::conv: {
            const NodeId w = g.parameter(l.weight, trainable);
            const NodeId b = g.parameter(l.bias, trainable);
            t.params.push_back(w);
            t.params.push_back(b);
            cur = g.conv2d(cur, w, b, l.stride, l.pad);
            break;
        }
        case LayerKind::dense: {
            const NodeId w = g.parameter(l.weight, trainable);
            const NodeId b = g.parameter(l.bias, trainable);
            t.params.push_back(w);
            t.params.push_back(b);
            cur = g.dense(cur, w, b);
            break;
        }
        case LayerKind::relu: cur = g.relu(cur); break;
        case LayerKind::sigmoid: cur = g.sigmoid(cur); break;
        case LayerKind::maxpool2: cur = g.maxpool2(cur); break;
        case LayerKind::upsample2: cur = g.upsample2(cur); break;
        case LayerKind::flatten: cur = g.flatten(cur); break;
        case LayerKind::reshape: cur = g.reshape(cur, l.target); break;
        }
        t.layer_outputs.push_back(cur);
    }
    t.output = cur;
    return t;
}

Tensor forward(const Network& net, const Tensor& x) {
    ComputeGraph<float> g;
    const Trace t = trace(g, g.input(x), net, false);
    return g.value(t.output);
}

bool same_architecture(const Network& a, const Network& b) {
    if (a.size() != b.size() || a.input_shape() != b.input_shape()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Layer& x = a.layer(i);
        const Layer& y = b.layer(i);
        if (x.kind != y.kind || x.stride != y.stride || x.pad != y.pad || x.target != y.target ||
            x.weight.shape() != y.weight.shape() || a.shape_at(i + 1) != b.shape_at(i + 1))
            return false;
    }
    return true;
}

bool parameters_equal(const Network& a, const Network& b) {
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (!bitwise_equal(*pa[i], *pb[i])) return false;
    return true;
}

std::string fingerprint(const Network& net) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ull;
        }
    };
    mix(net.arch_id().data(), net.arch_id().size());
    for (const Tensor* p : net.parameters()) mix(p->raw(), p->size() * sizeof(float));
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return net.arch_id() + "@" + hex;
}

}  // namespace advs
