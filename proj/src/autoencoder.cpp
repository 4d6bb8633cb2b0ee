#include "advs/autoencoder.hpp"

#include <string>

#include "advs/classifier.hpp"
#include "train_loop.hpp"

namespace advs {

std::vector<Tensor*> AutoEncoder::parameters() {
    std::vector<Tensor*> p = encoder.parameters();
    for (Tensor* t : decoder.parameters()) p.push_back(t);
    return p;
}

AutoEncoder build_autoencoder(std::uint64_t seed) {
    AutoEncoder ae;
    ae.code_dim = kCodeDim;
    ae.encoder = Network(std::string(kAutoEncoderArch) + "/encoder", Shape{1, 28, 28},
                         {Layer::conv(1, 8, 3, 1), Layer::relu(), Layer::maxpool2(),   // 8x14x14
                          Layer::conv(8, 16, 3, 1), Layer::relu(), Layer::maxpool2(),  // 16x7x7
                          Layer::flatten(), Layer::dense(16 * 7 * 7, kCodeDim)});  // linear code
    ae.decoder = Network(std::string(kAutoEncoderArch) + "/decoder", Shape{kCodeDim},
                         {Layer::dense(kCodeDim, 16 * 7 * 7), Layer::relu(), Layer::reshape(Shape{16, 7, 7}),
                          Layer::upsample2(), Layer::conv(16, 8, 3, 1), Layer::relu(),  // 8x14x14
                          Layer::upsample2(), Layer::conv(8, 1, 3, 1), Layer::sigmoid()});
    ae.encoder.init(seed);
    ae.decoder.init(seed ^ 0x9e3779b97f4a7c15ull);
    return ae;
}

double mse(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("mse: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc / double(a.size());
}

namespace {

NodeId reconstruct(ComputeGraph<float>& g, NodeId x, const AutoEncoder& ae, bool trainable, std::vector<NodeId>* params) {
    const Trace enc = trace(g, x, ae.encoder, trainable);
    const Trace dec = trace(g, enc.output, ae.decoder, trainable);
    if (params) {
        *params = enc.params;
        params->insert(params->end(), dec.params.begin(), dec.params.end());
    }
    return dec.output;
}

}  // namespace

Tensor denoise(const AutoEncoder& ae, const Tensor& image) {
    if (image.shape() != ae.encoder.input_shape())
        throw ShapeError("denoise: image " + shape_str(image.shape()) + " vs auto-encoder input " +
                         shape_str(ae.encoder.input_shape()));
    check_unit_range(image, "denoise");
    ComputeGraph<float> g;
    return g.value(reconstruct(g, g.input(image), ae, false, nullptr));
}

TrainReport train_autoencoder(AutoEncoder& ae, const AdvDataset& pairs, const TrainOptions& opt) {
    if (pairs.empty()) throw RangeError("train_autoencoder: empty dataset");
    for (const AdvSample& s : pairs.samples)
        if (s.clean.shape() != s.adv.shape() || s.adv.shape() != ae.encoder.input_shape())
            throw ShapeError("train_autoencoder: pair shapes do not match the auto-encoder input");

    detail::run_minibatch(
        ae.parameters(), pairs.size(), opt,
        [&](std::size_t idx, std::vector<Tensor>& acc) {
            const AdvSample& s = pairs.samples[idx];
            ComputeGraph<float> g;
            std::vector<NodeId> params;
            const NodeId out = reconstruct(g, g.input(s.adv), ae, true, &params);
            const NodeId loss = g.mse(out, g.input(s.clean));
            const auto grads = g.backward(loss);
            for (std::size_t k = 0; k < params.size(); ++k) detail::add_into(acc[k], grads.at(params[k]));
            return double(g.scalar(loss));
        },
        [](std::size_t) {});

    TrainReport r;
    r.epochs = opt.epochs;
    r.seed = opt.seed;
    double sum = 0.0;
    for (const AdvSample& s : pairs.samples) sum += mse(denoise(ae, s.adv), s.clean);
    r.final_train_loss = sum / double(pairs.size());
    return r;
}

}  // namespace advs
