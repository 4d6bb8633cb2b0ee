#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "advs/tensor.hpp"

namespace advs {

using NodeId = std::size_t;

enum class Activation { relu, sigmoid };

/// "relu" or "sigmoid"; anything else is a RangeError.
Activation parse_activation(std::string_view name);
std::string_view to_string(Activation kind);

enum class OpKind {
    input,
    parameter,
    conv2d,
    dense,
    activation,
    maxpool2,
    upsample2,
    reshape,
    softmax_xent,
    mse,
    sum,
    pick,
};

template <typename T>
class ComputeGraph;

/// Gradients keyed by node id. Holds an entry for every node that required a
/// gradient; nodes that do not reach the loss get zeros.
template <typename T>
class GradientMap {
public:
    bool contains(NodeId id) const { return id < grads_.size() && grads_[id].has_value(); }
    const BasicTensor<T>& at(NodeId id) const;
    std::size_t size() const;

private:
    friend class ComputeGraph<T>;
    std::vector<std::optional<BasicTensor<T>>> grads_;
};

/// Eager tape for reverse-mode differentiation. Every op computes its value
/// on creation; backward() walks the tape in reverse.
///
/// Gradients flow only into trainable parameters and inputs explicitly marked
/// differentiable (and everything computed from them).
template <typename T>
class ComputeGraph {
public:
    using TensorT = BasicTensor<T>;

    NodeId input(TensorT value, bool differentiable = false);

    /// References `value` without copying; it must outlive the graph.
    NodeId parameter(const TensorT& value, bool trainable = true);

    /// input [C_in,H,W], kernel [C_out,C_in,kH,kW], bias [C_out]; cross-correlation.
    NodeId conv2d(NodeId x, NodeId kernel, NodeId bias, std::size_t stride = 1, std::size_t pad = 0);
    /// input [n], weight [m,n], bias [m].
    NodeId dense(NodeId x, NodeId weight, NodeId bias);
    NodeId activation(NodeId x, Activation kind);
    NodeId relu(NodeId x) { return activation(x, Activation::relu); }
    NodeId sigmoid(NodeId x) { return activation(x, Activation::sigmoid); }
    /// 2x2 max pooling, stride 2; gradient goes to the first maximal cell in scan order.
    NodeId maxpool2(NodeId x);
    /// Nearest-neighbour 2x upsampling of [C,H,W].
    NodeId upsample2(NodeId x);
    NodeId reshape(NodeId x, Shape shape);
    NodeId flatten(NodeId x) { return reshape(x, Shape{value(x).size()}); }

    /// Scalar loss -log softmax(logits)[label]; the probabilities are kept on the node.
    NodeId softmax_cross_entropy(NodeId logits, std::size_t label);
    NodeId mse(NodeId pred, NodeId target);
    NodeId sum(NodeId x);
    /// Scalar holding element `index` of x (flat index).
    NodeId pick(NodeId x, std::size_t index);

    const TensorT& value(NodeId id) const;
    T scalar(NodeId id) const;
    const TensorT& probs(NodeId softmax_node) const;
    OpKind kind(NodeId id) const { return node(id).kind; }
    std::span<const NodeId> inputs(NodeId id) const;
    bool requires_grad(NodeId id) const { return node(id).grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    GradientMap<T> backward(NodeId loss) const;

private:
    struct Node {
        OpKind kind = OpKind::input;
        std::array<NodeId, 3> in{};
        std::uint8_t n_in = 0;
        TensorT owned;
        const TensorT* ext = nullptr;
        bool grad = false;
        std::size_t stride = 1, pad = 0, index = 0;
        Activation act = Activation::relu;
        std::vector<std::uint32_t> argmax;
        TensorT aux;

        const TensorT& val() const { return ext ? *ext : owned; }
    };

    const Node& node(NodeId id) const;
    NodeId push(Node n);
    Node op(OpKind kind, std::initializer_list<NodeId> ins) const;

    std::vector<Node> nodes_;
};

extern template class GradientMap<float>;
extern template class GradientMap<double>;
extern template class ComputeGraph<float>;
extern template class ComputeGraph<double>;

}  // namespace advs
