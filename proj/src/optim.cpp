#include "advs/optim.hpp"

#include <cmath>
#include <string>

namespace advs {

namespace {

void check_grads(const char* who, const std::vector<Tensor*>& params, std::span<const Tensor> grads) {
    if (grads.size() != params.size())
        throw RangeError(std::string(who) + ": expected " + std::to_string(params.size()) + " gradients, got " +
                         std::to_string(grads.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].empty()) throw RangeError(std::string(who) + ": missing gradient for parameter " + std::to_string(i));
        if (grads[i].shape() != params[i]->shape())
            throw ShapeError(std::string(who) + ": gradient " + shape_str(grads[i].shape()) + " for parameter " +
                             shape_str(params[i]->shape()));
    }
}

}  // namespace

Sgd::Sgd(std::vector<Tensor*> params, double lr, double momentum)
    : params_(std::move(params)), lr_(lr), momentum_(momentum) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw RangeError("sgd: learning rate must be finite and non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw RangeError("sgd: momentum must lie in [0,1)");
    velocity_.reserve(params_.size());
    for (Tensor* p : params_) {
        if (!p || p->empty()) throw ShapeError("sgd: null or empty parameter");
        velocity_.emplace_back(p->shape());
    }
}

void Sgd::step(std::span<const Tensor> grads) {
    check_grads("sgd", params_, grads);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto p = params_[i]->data();
        auto v = velocity_[i].data();
        auto g = grads[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            v[j] = float(momentum_ * double(v[j]) + double(g[j]));
            p[j] = float(double(p[j]) - lr_ * double(v[j]));
        }
    }
}

Adam::Adam(std::vector<Tensor*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw RangeError("adam: learning rate must be finite and non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw RangeError("adam: betas must lie in [0,1)");
    if (!(eps > 0.0)) throw RangeError("adam: eps must be positive");
    for (Tensor* p : params_) {
        if (!p || p->empty()) throw ShapeError("adam: null or empty parameter");
        m_.emplace_back(p->shape());
        v_.emplace_back(p->shape());
    }
}

void Adam::step(std::span<const Tensor> grads) {
    check_grads("adam", params_, grads);
    ++t_;
    b1_pow_ *= beta1_;
    b2_pow_ *= beta2_;
    const double c1 = 1.0 - b1_pow_, c2 = 1.0 - b2_pow_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto p = params_[i]->data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        auto g = grads[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j];
            m[j] = float(beta1_ * double(m[j]) + (1.0 - beta1_) * gj);
            v[j] = float(beta2_ * double(v[j]) + (1.0 - beta2_) * gj * gj);
            const double mh = double(m[j]) / c1, vh = double(v[j]) / c2;
            p[j] = float(double(p[j]) - lr_ * mh / (std::sqrt(vh) + eps_));
        }
    }
}

}  // namespace advs
