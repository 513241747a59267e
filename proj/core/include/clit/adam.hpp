#pragma once

#include <string>
#include <utility>
#include <vector>

#include "clit/tensor.hpp"

namespace clit {

// Per-parameter Adam moments. Shapes always match the owning parameter.
template <typename S>
struct AdamStateT {
    std::vector<S> m;
    std::vector<S> v;
};

// Standard bias-corrected Adam (beta1=0.9, beta2=0.999, eps=1e-8). The step
// counter is shared across parameters and increments exactly once per step().
template <typename S>
class AdamT {
public:
    explicit AdamT(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void attach(const std::vector<std::pair<std::string, TensorT<S>>>& params) {
        params_ = params;
        states_.clear();
        states_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            const size_t n = static_cast<size_t>(params_[i].second.numel());
            states_[i].m.assign(n, S(0));
            states_[i].v.assign(n, S(0));
        }
        t_ = 0;
    }

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    int64_t step_count() const { return t_; }

    // Applies one update from the gradients currently on the parameters.
    // Parameters without an accumulated gradient are treated as zero-grad.
    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (size_t pi = 0; pi < params_.size(); ++pi) {
            auto& tensor = params_[pi].second;
            auto& st = states_[pi];
            auto value = tensor.data();
            auto grad = tensor.grad();  // zero-filled on first access
            const int64_t n = tensor.numel();
            for (int64_t i = 0; i < n; ++i) {
                const S g = grad[i];
                st.m[i] = static_cast<S>(beta1_) * st.m[i] + static_cast<S>(1.0 - beta1_) * g;
                st.v[i] = static_cast<S>(beta2_) * st.v[i] + static_cast<S>(1.0 - beta2_) * g * g;
                const double mhat = static_cast<double>(st.m[i]) / bc1;
                const double vhat = static_cast<double>(st.v[i]) / bc2;
                value[i] -= static_cast<S>(lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    const AdamStateT<S>& state(size_t i) const { return states_[i]; }
    size_t size() const { return params_.size(); }

private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<std::pair<std::string, TensorT<S>>> params_;
    std::vector<AdamStateT<S>> states_;
};

using Adam = AdamT<float>;

}  // namespace clit
