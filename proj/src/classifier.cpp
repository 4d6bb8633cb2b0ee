#include "advs/classifier.hpp"

#include <cmath>
#include <string>

#include "train_loop.hpp"

namespace advs {

Network build_classifier(std::uint64_t seed) {
    Network net(std::string(kClassifierArch), Shape{1, 28, 28},
                {Layer::conv(1, 16, 3, 1), Layer::relu(), Layer::maxpool2(), Layer::conv(16, 32, 3, 1), Layer::relu(),
                 Layer::maxpool2(), Layer::flatten(), Layer::dense(32 * 7 * 7, kNumClasses)});
    net.init(seed);
    return net;
}

void check_unit_range(const Tensor& image, std::string_view what) {
    for (float v : image.data())
        if (!(v >= 0.0f && v <= 1.0f))
            throw RangeError(std::string(what) + ": pixel value " + std::to_string(v) + " outside [0,1]");
}

Prediction predict_from_logits(const Tensor& logits) {
    ComputeGraph<float> g;
    const NodeId loss = g.softmax_cross_entropy(g.input(logits.reshaped(Shape{logits.size()})), 0);
    Prediction p;
    p.probs = g.probs(loss);
    for (std::size_t i = 1; i < p.probs.size(); ++i)
        if (p.probs[i] > p.probs[p.label]) p.label = i;
    return p;
}

Prediction classify(const Network& net, const Tensor& image) {
    check_unit_range(image, "classify");
    return predict_from_logits(forward(net, image));
}

namespace {

void check_dataset(const Network& net, const Dataset& ds, const char* what) {
    if (ds.empty()) throw RangeError(std::string(what) + ": empty dataset");
    ds.validate();
    if (ds.images.front().shape() != net.input_shape())
        throw ShapeError(std::string(what) + ": images " + shape_str(ds.images.front().shape()) +
                         " do not match network input " + shape_str(net.input_shape()));
    if (net.output_shape() != Shape{kNumClasses})
        throw ShapeError(std::string(what) + ": network must emit 10 logits, emits " + shape_str(net.output_shape()));
}

}  // namespace

double accuracy(const Network& net, const Dataset& ds) {
    check_dataset(net, ds, "accuracy");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) correct += predict_from_logits(forward(net, ds.images[i])).label == ds.labels[i];
    return double(correct) / double(ds.size());
}

double mean_loss(const Network& net, const Dataset& ds) {
    check_dataset(net, ds, "mean_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ComputeGraph<float> g;
        const Trace t = trace(g, g.input(ds.images[i]), net, false);
        sum += g.scalar(g.softmax_cross_entropy(t.output, ds.labels[i]));
    }
    return sum / double(ds.size());
}

TrainReport train_classifier(Network& net, const Dataset& train, const Dataset& test, const TrainOptions& opt) {
    check_dataset(net, train, "train_classifier");
    check_dataset(net, test, "train_classifier");
    detail::run_minibatch(
        net.parameters(), train.size(), opt,
        [&](std::size_t idx, std::vector<Tensor>& acc) {
            ComputeGraph<float> g;
            const Trace t = trace(g, g.input(train.images[idx]), net, true);
            const NodeId loss = g.softmax_cross_entropy(t.output, train.labels[idx]);
            const auto grads = g.backward(loss);
            for (std::size_t k = 0; k < t.params.size(); ++k) detail::add_into(acc[k], grads.at(t.params[k]));
            return double(g.scalar(loss));
        },
        [](std::size_t) {});

    TrainReport r;
    r.epochs = opt.epochs;
    r.seed = opt.seed;
    r.final_train_loss = mean_loss(net, train);
    r.test_accuracy = accuracy(net, test);
    return r;
}

}  // namespace advs
