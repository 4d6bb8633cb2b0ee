#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "advs/graph.hpp"
#include "advs/tensor.hpp"

namespace advs {

enum class LayerKind { conv, relu, sigmoid, maxpool2, upsample2, flatten, reshape, dense };

std::string_view to_string(LayerKind kind);

struct Layer {
    LayerKind kind = LayerKind::relu;
    Tensor weight;  // conv [C_out,C_in,k,k]; dense [out,in]
    Tensor bias;
    std::size_t stride = 1, pad = 0;
    Shape target;  // reshape only

    static Layer conv(std::size_t in_channels, std::size_t out_channels, std::size_t k, std::size_t pad,
                      std::size_t stride = 1);
    static Layer dense(std::size_t in, std::size_t out);
    static Layer relu() { return of(LayerKind::relu); }
    static Layer sigmoid() { return of(LayerKind::sigmoid); }
    static Layer maxpool2() { return of(LayerKind::maxpool2); }
    static Layer upsample2() { return of(LayerKind::upsample2); }
    static Layer flatten() { return of(LayerKind::flatten); }
    static Layer reshape(Shape target);

    static Layer of(LayerKind kind) {
        Layer l;
        l.kind = kind;
        return l;
    }

    bool has_params() const noexcept { return kind == LayerKind::conv || kind == LayerKind::dense; }
};

/// Ordered layer stack with an arch tag and a validated input shape.
class Network {
public:
    Network() = default;
    /// Throws ShapeError if any layer does not accept its predecessor's output.
    Network(std::string arch_id, Shape input_shape, std::vector<Layer> layers);

    const std::string& arch_id() const noexcept { return arch_id_; }
    const Shape& input_shape() const noexcept { return shapes_.front(); }
    const Shape& output_shape() const noexcept { return shapes_.back(); }
    /// Shape at the boundary after the first `n_layers` layers.
    const Shape& shape_at(std::size_t n_layers) const { return shapes_.at(n_layers); }

    std::size_t size() const noexcept { return layers_.size(); }
    bool empty() const noexcept { return layers_.empty(); }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    /// weight, bias for every parametric layer, in layer order.
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::size_t parameter_count() const;

    /// Layers [begin, end) as a standalone network.
    Network slice(std::size_t begin, std::size_t end, std::string arch_id) const;

    /// He-uniform weights U(-sqrt(6/fan_in), +sqrt(6/fan_in)), zero biases.
    void init(std::uint64_t seed);

private:
    std::string arch_id_;
    std::vector<Layer> layers_;
    std::vector<Shape> shapes_{Shape{}};
};

struct Trace {
    NodeId output = 0;
    std::vector<NodeId> layer_outputs;  // one per layer
    std::vector<NodeId> params;         // parallel to Network::parameters()
};

/// Records net's forward pass on node x. Parameters enter the graph as
/// trainable leaves only when `trainable` is set.
Trace trace(ComputeGraph<float>& graph, NodeId x, const Network& net, bool trainable);

/// Plain inference.
Tensor forward(const Network& net, const Tensor& x);

/// Same layer kinds, hyper-parameters and boundary shapes.
bool same_architecture(const Network& a, const Network& b);

bool parameters_equal(const Network& a, const Network& b);

/// "<arch_id>@<16 hex digits>" over the parameter bytes (FNV-1a 64).
std::string fingerprint(const Network& net);

}  // namespace advs
