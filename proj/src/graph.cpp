#include "advs/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "advs/simd/kernels.hpp"

namespace advs {

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw RangeError("unknown activation kind '" + std::string(name) + "'");
}

std::string_view to_string(Activation kind) {
    return kind == Activation::relu ? "relu" : "sigmoid";
}

namespace {

using kernels::ConvGeom;

template <typename T>
void conv_forward(const ConvGeom& g, const T* in, const T* k, const T* b, T* out) {
    if constexpr (std::is_same_v<T, float>)
        kernels::active().conv2d_forward(g, in, k, b, out);
    else
        kernels::conv2d_forward_ref(g, in, k, b, out);
}

template <typename T>
void conv_input_grad(const ConvGeom& g, const T* dout, const T* k, T* din) {
    if constexpr (std::is_same_v<T, float>)
        kernels::active().conv2d_input_grad(g, dout, k, din);
    else
        kernels::conv2d_input_grad_ref(g, dout, k, din);
}

template <typename T>
void conv_kernel_grad(const ConvGeom& g, const T* in, const T* dout, T* dk) {
    if constexpr (std::is_same_v<T, float>)
        kernels::active().conv2d_kernel_grad(g, in, dout, dk);
    else
        kernels::conv2d_kernel_grad_ref(g, in, dout, dk);
}

template <typename T>
void dense_forward(std::size_t m, std::size_t n, const T* x, const T* w, const T* b, T* out) {
    if constexpr (std::is_same_v<T, float>)
        kernels::active().dense_forward(m, n, x, w, b, out);
    else
        kernels::dense_forward_ref(m, n, x, w, b, out);
}

template <typename T>
void dense_input_grad(std::size_t m, std::size_t n, const T* w, const T* grad, T* dx) {
    if constexpr (std::is_same_v<T, float>)
        kernels::active().dense_input_grad(m, n, w, grad, dx);
    else
        kernels::dense_input_grad_ref(m, n, w, grad, dx);
}

template <typename T>
ConvGeom conv_geom(const BasicTensor<T>& x, const BasicTensor<T>& k, const BasicTensor<T>& b, std::size_t stride,
                   std::size_t pad) {
    if (x.rank() != 3) throw ShapeError("conv2d: input must be [C_in,H,W], got " + shape_str(x.shape()));
    if (k.rank() != 4) throw ShapeError("conv2d: kernel must be [C_out,C_in,kH,kW], got " + shape_str(k.shape()));
    if (k.dim(1) != x.dim(0))
        throw ShapeError("conv2d: kernel C_in=" + std::to_string(k.dim(1)) + " but input C_in=" +
                         std::to_string(x.dim(0)));
    if (b.rank() != 1 || b.dim(0) != k.dim(0))
        throw ShapeError("conv2d: bias " + shape_str(b.shape()) + " does not match C_out=" + std::to_string(k.dim(0)));
    if (stride == 0) throw ShapeError("conv2d: stride must be positive");
    if (x.dim(1) + 2 * pad < k.dim(2))
        throw ShapeError("conv2d: H+2*pad=" + std::to_string(x.dim(1) + 2 * pad) + " smaller than kH=" +
                         std::to_string(k.dim(2)));
    if (x.dim(2) + 2 * pad < k.dim(3))
        throw ShapeError("conv2d: W+2*pad=" + std::to_string(x.dim(2) + 2 * pad) + " smaller than kW=" +
                         std::to_string(k.dim(3)));
    return ConvGeom::make(x.dim(0), x.dim(1), x.dim(2), k.dim(0), k.dim(2), k.dim(3), stride, pad);
}

template <typename T>
void accumulate(std::optional<BasicTensor<T>>& slot, BasicTensor<T>&& contribution) {
    if (!slot) {
        slot = std::move(contribution);
        return;
    }
    auto dst = slot->data();
    auto src = contribution.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename T>
const BasicTensor<T>& GradientMap<T>::at(NodeId id) const {
    if (!contains(id)) throw RangeError("no gradient recorded for node " + std::to_string(id));
    return *grads_[id];
}

template <typename T>
std::size_t GradientMap<T>::size() const {
    return std::size_t(std::count_if(grads_.begin(), grads_.end(), [](const auto& g) { return g.has_value(); }));
}

template <typename T>
const typename ComputeGraph<T>::Node& ComputeGraph<T>::node(NodeId id) const {
    if (id >= nodes_.size()) throw RangeError("node id " + std::to_string(id) + " not in graph");
    return nodes_[id];
}

template <typename T>
NodeId ComputeGraph<T>::push(Node n) {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

template <typename T>
typename ComputeGraph<T>::Node ComputeGraph<T>::op(OpKind kind, std::initializer_list<NodeId> ins) const {
    Node n;
    n.kind = kind;
    for (NodeId id : ins) {
        n.grad = n.grad || node(id).grad;
        n.in[n.n_in++] = id;
    }
    return n;
}

template <typename T>
const BasicTensor<T>& ComputeGraph<T>::value(NodeId id) const {
    return node(id).val();
}

template <typename T>
T ComputeGraph<T>::scalar(NodeId id) const {
    const auto& v = value(id);
    if (v.size() != 1) throw ShapeError("node " + std::to_string(id) + " is not scalar: " + shape_str(v.shape()));
    return v[0];
}

template <typename T>
const BasicTensor<T>& ComputeGraph<T>::probs(NodeId id) const {
    const Node& n = node(id);
    if (n.kind != OpKind::softmax_xent) throw RangeError("node " + std::to_string(id) + " is not a softmax loss");
    return n.aux;
}

template <typename T>
std::span<const NodeId> ComputeGraph<T>::inputs(NodeId id) const {
    const Node& n = node(id);
    return {n.in.data(), n.n_in};
}

template <typename T>
NodeId ComputeGraph<T>::input(TensorT value, bool differentiable) {
    if (value.empty()) throw ShapeError("graph input must be a non-empty tensor");
    Node n;
    n.kind = OpKind::input;
    n.owned = std::move(value);
    n.grad = differentiable;
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::parameter(const TensorT& value, bool trainable) {
    if (value.empty()) throw ShapeError("graph parameter must be a non-empty tensor");
    Node n;
    n.kind = OpKind::parameter;
    n.ext = &value;
    n.grad = trainable;
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::conv2d(NodeId x, NodeId kernel, NodeId bias, std::size_t stride, std::size_t pad) {
    Node n = op(OpKind::conv2d, {x, kernel, bias});
    const auto& xv = value(x);
    const auto& kv = value(kernel);
    const auto& bv = value(bias);
    const ConvGeom g = conv_geom(xv, kv, bv, stride, pad);
    n.stride = stride;
    n.pad = pad;
    n.owned = TensorT(Shape{g.cout, g.oh, g.ow});
    conv_forward(g, xv.raw(), kv.raw(), bv.raw(), n.owned.raw());
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::dense(NodeId x, NodeId weight, NodeId bias) {
    Node n = op(OpKind::dense, {x, weight, bias});
    const auto& xv = value(x);
    const auto& wv = value(weight);
    const auto& bv = value(bias);
    if (xv.rank() != 1) throw ShapeError("dense: input must be rank 1, got " + shape_str(xv.shape()));
    if (wv.rank() != 2 || wv.dim(1) != xv.dim(0))
        throw ShapeError("dense: weight " + shape_str(wv.shape()) + " does not accept input " + shape_str(xv.shape()));
    if (bv.rank() != 1 || bv.dim(0) != wv.dim(0))
        throw ShapeError("dense: bias " + shape_str(bv.shape()) + " does not match weight " + shape_str(wv.shape()));
    n.owned = TensorT(Shape{wv.dim(0)});
    dense_forward(wv.dim(0), wv.dim(1), xv.raw(), wv.raw(), bv.raw(), n.owned.raw());
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::activation(NodeId x, Activation kind) {
    Node n = op(OpKind::activation, {x});
    n.act = kind;
    n.owned = value(x);
    for (auto& v : n.owned.data()) {
        if (kind == Activation::relu)
            v = v > T(0) ? v : T(0);
        else
            v = T(1.0 / (1.0 + std::exp(-double(v))));
    }
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::maxpool2(NodeId x) {
    Node n = op(OpKind::maxpool2, {x});
    const auto& xv = value(x);
    if (xv.rank() != 3) throw ShapeError("maxpool2: input must be [C,H,W], got " + shape_str(xv.shape()));
    const std::size_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    if (h % 2 != 0 || w % 2 != 0) throw ShapeError("maxpool2: H and W must be even, got " + shape_str(xv.shape()));
    const std::size_t oh = h / 2, ow = w / 2;
    n.owned = TensorT(Shape{c, oh, ow});
    n.argmax.resize(c * oh * ow);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::size_t base = (ch * h + 2 * oy) * w + 2 * ox;
                const std::size_t cells[4] = {base, base + 1, base + w, base + w + 1};
                std::size_t best = cells[0];
                for (std::size_t i = 1; i < 4; ++i)
                    if (xv[cells[i]] > xv[best]) best = cells[i];
                const std::size_t o = (ch * oh + oy) * ow + ox;
                n.owned[o] = xv[best];
                n.argmax[o] = static_cast<std::uint32_t>(best);
            }
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::upsample2(NodeId x) {
    Node n = op(OpKind::upsample2, {x});
    const auto& xv = value(x);
    if (xv.rank() != 3) throw ShapeError("upsample2: input must be [C,H,W], got " + shape_str(xv.shape()));
    const std::size_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    n.owned = TensorT(Shape{c, 2 * h, 2 * w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < 2 * h; ++y)
            for (std::size_t xx = 0; xx < 2 * w; ++xx)
                n.owned[(ch * 2 * h + y) * 2 * w + xx] = xv[(ch * h + y / 2) * w + xx / 2];
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::reshape(NodeId x, Shape shape) {
    Node n = op(OpKind::reshape, {x});
    n.owned = value(x).reshaped(std::move(shape));
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::softmax_cross_entropy(NodeId logits, std::size_t label) {
    Node n = op(OpKind::softmax_xent, {logits});
    const auto& z = value(logits);
    if (z.rank() != 1) throw ShapeError("softmax_cross_entropy: logits must be rank 1, got " + shape_str(z.shape()));
    if (label >= z.size())
        throw RangeError("softmax_cross_entropy: label " + std::to_string(label) + " outside [0," +
                         std::to_string(z.size()) + ")");
    const T zmax = *std::max_element(z.data().begin(), z.data().end());
    std::vector<double> e(z.size());
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        e[i] = std::exp(double(z[i] - zmax));
        s += e[i];
    }
    n.aux = TensorT(Shape{z.size()});
    for (std::size_t i = 0; i < z.size(); ++i) n.aux[i] = T(e[i] / s);
    n.index = label;
    n.owned = TensorT(Shape{1}, T(std::log(s) - double(z[label] - zmax)));
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::mse(NodeId pred, NodeId target) {
    Node n = op(OpKind::mse, {pred, target});
    const auto& p = value(pred);
    const auto& t = value(target);
    if (p.shape() != t.shape())
        throw ShapeError("mse: prediction " + shape_str(p.shape()) + " vs target " + shape_str(t.shape()));
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = double(p[i]) - double(t[i]);
        acc += d * d;
    }
    n.owned = TensorT(Shape{1}, T(acc / double(p.size())));
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::sum(NodeId x) {
    Node n = op(OpKind::sum, {x});
    double acc = 0.0;
    for (T v : value(x).data()) acc += double(v);
    n.owned = TensorT(Shape{1}, T(acc));
    return push(std::move(n));
}

template <typename T>
NodeId ComputeGraph<T>::pick(NodeId x, std::size_t index) {
    Node n = op(OpKind::pick, {x});
    const auto& xv = value(x);
    if (index >= xv.size())
        throw RangeError("pick: index " + std::to_string(index) + " outside tensor of size " +
                         std::to_string(xv.size()));
    n.index = index;
    n.owned = TensorT(Shape{1}, xv[index]);
    return push(std::move(n));
}

template <typename T>
GradientMap<T> ComputeGraph<T>::backward(NodeId loss) const {
    const Node& root = node(loss);
    if (root.val().empty()) throw Error("backward: node " + std::to_string(loss) + " has no forward value");
    if (root.val().size() != 1)
        throw ShapeError("backward: loss node must be scalar, got " + shape_str(root.val().shape()));

    GradientMap<T> out;
    auto& grads = out.grads_;
    grads.resize(nodes_.size());
    if (root.grad) grads[loss] = TensorT(root.val().shape(), T(1));

    for (NodeId id = loss + 1; id-- > 0;) {
        if (!grads[id]) continue;
        const Node& n = nodes_[id];
        const TensorT& g = *grads[id];
        auto wants = [&](std::size_t slot) { return nodes_[n.in[slot]].grad; };
        auto in_val = [&](std::size_t slot) -> const TensorT& { return nodes_[n.in[slot]].val(); };

        switch (n.kind) {
        case OpKind::input:
        case OpKind::parameter:
            break;
        case OpKind::conv2d: {
            const TensorT& x = in_val(0);
            const TensorT& k = in_val(1);
            const ConvGeom geo = ConvGeom::make(x.dim(0), x.dim(1), x.dim(2), k.dim(0), k.dim(2), k.dim(3),
                                                n.stride, n.pad);
            if (wants(0)) {
                TensorT dx(x.shape());
                conv_input_grad(geo, g.raw(), k.raw(), dx.raw());
                accumulate(grads[n.in[0]], std::move(dx));
            }
            if (wants(1)) {
                TensorT dk(k.shape());
                conv_kernel_grad(geo, x.raw(), g.raw(), dk.raw());
                accumulate(grads[n.in[1]], std::move(dk));
            }
            if (wants(2)) {
                TensorT db(Shape{geo.cout});
                const std::size_t plane = geo.oh * geo.ow;
                for (std::size_t co = 0; co < geo.cout; ++co) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < plane; ++p) acc += double(g[co * plane + p]);
                    db[co] = T(acc);
                }
                accumulate(grads[n.in[2]], std::move(db));
            }
            break;
        }
        case OpKind::dense: {
            const TensorT& x = in_val(0);
            const TensorT& w = in_val(1);
            const std::size_t m = w.dim(0), cols = w.dim(1);
            if (wants(0)) {
                TensorT dx(x.shape());
                dense_input_grad(m, cols, w.raw(), g.raw(), dx.raw());
                accumulate(grads[n.in[0]], std::move(dx));
            }
            if (wants(1)) {
                TensorT dw(w.shape());
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < cols; ++j) dw[i * cols + j] = T(double(g[i]) * double(x[j]));
                accumulate(grads[n.in[1]], std::move(dw));
            }
            if (wants(2)) accumulate(grads[n.in[2]], TensorT(g));
            break;
        }
        case OpKind::activation: {
            if (!wants(0)) break;
            TensorT dx(g.shape());
            if (n.act == Activation::relu) {
                const TensorT& x = in_val(0);
                for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = x[i] > T(0) ? g[i] : T(0);
            } else {
                const TensorT& s = n.owned;
                for (std::size_t i = 0; i < dx.size(); ++i)
                    dx[i] = T(double(g[i]) * double(s[i]) * (1.0 - double(s[i])));
            }
            accumulate(grads[n.in[0]], std::move(dx));
            break;
        }
        case OpKind::maxpool2: {
            if (!wants(0)) break;
            TensorT dx(in_val(0).shape());
            for (std::size_t o = 0; o < n.argmax.size(); ++o) dx[n.argmax[o]] = g[o];
            accumulate(grads[n.in[0]], std::move(dx));
            break;
        }
        case OpKind::upsample2: {
            if (!wants(0)) break;
            const TensorT& x = in_val(0);
            const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
            TensorT dx(x.shape());
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t xx = 0; xx < w; ++xx) {
                        const std::size_t r0 = (ch * 2 * h + 2 * y) * 2 * w + 2 * xx;
                        const std::size_t r1 = r0 + 2 * w;
                        dx[(ch * h + y) * w + xx] =
                            T(double(g[r0]) + double(g[r0 + 1]) + double(g[r1]) + double(g[r1 + 1]));
                    }
            accumulate(grads[n.in[0]], std::move(dx));
            break;
        }
        case OpKind::reshape:
            if (wants(0)) accumulate(grads[n.in[0]], g.reshaped(in_val(0).shape()));
            break;
        case OpKind::softmax_xent: {
            if (!wants(0)) break;
            TensorT dz(n.aux.shape());
            const double up = double(g[0]);
            // p_y - 1 is taken as -sum_{j != y} p_j: when p_y rounds to 1 the
            // direct difference would lose the pull-down on the true logit.
            double rest = 0.0;
            for (std::size_t i = 0; i < dz.size(); ++i) {
                dz[i] = T(double(n.aux[i]) * up);
                if (i != n.index) rest += double(n.aux[i]);
            }
            dz[n.index] = T(-rest * up);
            accumulate(grads[n.in[0]], std::move(dz));
            break;
        }
        case OpKind::mse: {
            const TensorT& p = in_val(0);
            const TensorT& t = in_val(1);
            const double scale = 2.0 * double(g[0]) / double(p.size());
            if (wants(0)) {
                TensorT dp(p.shape());
                for (std::size_t i = 0; i < p.size(); ++i) dp[i] = T(scale * (double(p[i]) - double(t[i])));
                accumulate(grads[n.in[0]], std::move(dp));
            }
            if (wants(1)) {
                TensorT dt(t.shape());
                for (std::size_t i = 0; i < t.size(); ++i) dt[i] = T(scale * (double(t[i]) - double(p[i])));
                accumulate(grads[n.in[1]], std::move(dt));
            }
            break;
        }
        case OpKind::sum:
            if (wants(0)) accumulate(grads[n.in[0]], TensorT(in_val(0).shape(), g[0]));
            break;
        case OpKind::pick:
            if (wants(0)) {
                TensorT dx(in_val(0).shape());
                dx[n.index] = g[0];
                accumulate(grads[n.in[0]], std::move(dx));
            }
            break;
        }
    }

    for (NodeId id = 0; id < nodes_.size(); ++id)
        if (nodes_[id].grad && !grads[id]) grads[id] = TensorT(nodes_[id].val().shape());
    return out;
}

template class GradientMap<float>;
template class GradientMap<double>;
template class ComputeGraph<float>;
template class ComputeGraph<double>;

}  // namespace advs
