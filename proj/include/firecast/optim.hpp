#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "firecast/params.hpp"

namespace firecast {

/// Plain SGD: p -= lr * g. Requires gradients populated via
/// Tape::grads_into since the last zero_grads().
template <class T>
void sgd_step(ParamStore<T>& store, double lr) {
    if (!store.grads_ready())
        throw std::logic_error("sgd_step: no gradients accumulated since zero_grads()");
    for (auto& e : store.entries())
        for (std::size_t i = 0; i < e.value.size(); ++i)
            e.value[i] -= static_cast<T>(lr * static_cast<double>(e.grad[i]));
}

/// Adam with bias correction (Kingma & Ba). Moment state lives here, in
/// double regardless of the parameter precision, keyed by tensor name;
/// reusing one Adam across unrelated stores is a bug the key check can't
/// catch, so don't.
template <class T>
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (!(lr > 0) || beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 || !(eps > 0))
            throw std::invalid_argument("Adam: bad hyperparameters (lr " + std::to_string(lr) +
                                        ", beta1 " + std::to_string(beta1) + ", beta2 " +
                                        std::to_string(beta2) + ")");
    }

    void step(ParamStore<T>& store) {
        if (!store.grads_ready())
            throw std::logic_error("Adam::step: no gradients accumulated since zero_grads()");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (auto& e : store.entries()) {
            Moments& mo = state_[e.name];
            if (mo.m.empty()) {
                mo.m.assign(e.value.size(), 0.0);
                mo.v.assign(e.value.size(), 0.0);
            } else if (mo.m.size() != e.value.size()) {
                throw std::logic_error("Adam::step: tensor '" + e.name +
                                       "' changed size under the optimizer");
            }
            for (std::size_t i = 0; i < e.value.size(); ++i) {
                const double g = static_cast<double>(e.grad[i]);
                mo.m[i] = beta1_ * mo.m[i] + (1.0 - beta1_) * g;
                mo.v[i] = beta2_ * mo.v[i] + (1.0 - beta2_) * g * g;
                const double mhat = mo.m[i] / bc1;
                const double vhat = mo.v[i] / bc2;
                e.value[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    std::int64_t steps_taken() const { return t_; }
    double lr() const { return lr_; }
    void set_lr(double lr) {
        if (!(lr > 0)) throw std::invalid_argument("Adam: lr must be positive");
        lr_ = lr;
    }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::unordered_map<std::string, Moments> state_;
};

}  // namespace firecast
