#pragma once

#include <span>
#include <vector>

#include "advs/tensor.hpp"

namespace advs {

/// Common interface so training loops can switch update rules.
class Optimizer {
public:
    virtual ~Optimizer() = default;
    /// grads[i] updates params[i]; a missing (empty) or misshapen entry is an error.
    virtual void step(std::span<const Tensor> grads) = 0;
};

/// SGD with heavy-ball momentum: v <- momentum*v + g; p <- p - lr*v.
/// Velocity persists across step() calls and is keyed by parameter position.
class Sgd final : public Optimizer {
public:
    Sgd(std::vector<Tensor*> params, double lr, double momentum = 0.9);

    void step(std::span<const Tensor> grads) override;

    double lr() const noexcept { return lr_; }
    double momentum() const noexcept { return momentum_; }
    const std::vector<Tensor>& velocity() const noexcept { return velocity_; }

private:
    std::vector<Tensor*> params_;
    std::vector<Tensor> velocity_;
    double lr_;
    double momentum_;
};

/// Adam with bias correction. Moments are stored in float, arithmetic is double.
class Adam final : public Optimizer {
public:
    Adam(std::vector<Tensor*> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(std::span<const Tensor> grads) override;

    std::size_t steps() const noexcept { return t_; }

private:
    std::vector<Tensor*> params_;
    std::vector<Tensor> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    double b1_pow_ = 1.0, b2_pow_ = 1.0;
    std::size_t t_ = 0;
};

}  // namespace advs
