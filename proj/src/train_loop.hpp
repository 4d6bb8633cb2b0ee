#pragma once

#include <memory>
#include <numeric>
#include <vector>

#include "advs/optim.hpp"
#include "advs/rng.hpp"
#include "advs/training.hpp"

namespace advs::detail {

/// Minibatch training over n samples. sample(index, grads) adds one sample's
/// gradients into grads (parallel to params) and returns its loss; the batch
/// mean is applied. on_batch(batch_number) runs before each batch.
template <typename SampleFn, typename BatchFn>
void run_minibatch(std::vector<Tensor*> params, std::size_t n, const TrainOptions& opt, SampleFn&& sample,
                       BatchFn&& on_batch) {
    if (opt.batch_size == 0) throw RangeError("batch size must be positive");
    std::unique_ptr<Optimizer> optimizer;
    if (opt.optimizer == OptimizerKind::adam) optimizer = std::make_unique<Adam>(params, opt.lr);
    else optimizer = std::make_unique<Sgd>(params, opt.lr, opt.momentum);
    std::vector<Tensor> acc;
    acc.reserve(params.size());
    for (Tensor* p : params) acc.emplace_back(p->shape());

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(opt.seed);
    std::size_t batch_no = 0;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += opt.batch_size) {
            const std::size_t end = std::min(n, start + opt.batch_size);
            on_batch(batch_no++);
            for (Tensor& a : acc) a.fill(0.0f);
            for (std::size_t k = start; k < end; ++k) loss_sum += sample(order[k], acc);
            const float inv = 1.0f / float(end - start);
            for (Tensor& a : acc)
                for (float& v : a.data()) v *= inv;
            optimizer->step(acc);
        }
        if (opt.on_epoch) opt.on_epoch(epoch, loss_sum / double(n));
    }
}

inline void add_into(Tensor& dst, const Tensor& src) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace advs::detail
