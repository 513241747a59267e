#pragma once

#include <functional>
#include <string>

#include "clit/ops.hpp"
#include "clit/rng.hpp"

namespace clit {

template <typename S>
using ParamVisitor = std::function<void(const std::string&, TensorT<S>&)>;

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases.
template <typename S>
void init_uniform(TensorT<S>& t, int64_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.data()) v = static_cast<S>(rng.uniform(-bound, bound));
}

template <typename S>
struct Conv2dLayerT {
    TensorT<S> weight;  // k x k x ci x co
    TensorT<S> bias;    // co
    Padding pad = Padding::kZero;

    Conv2dLayerT() = default;
    Conv2dLayerT(int64_t k, int64_t ci, int64_t co, Rng& rng, Padding p = Padding::kZero)
        : weight({k, k, ci, co}), bias({co}), pad(p) {
        init_uniform(weight, k * k * ci, rng);
        init_uniform(bias, k * k * ci, rng);
    }

    TensorT<S> forward(TensorT<S> x) const { return ops::conv2d(x, weight, bias, pad); }

    void zero() {
        for (auto& v : weight.data()) v = S(0);
        for (auto& v : bias.data()) v = S(0);
    }

    void visit(const std::string& prefix, const ParamVisitor<S>& fn) {
        fn(prefix + ".weight", weight);
        fn(prefix + ".bias", bias);
    }
};

template <typename S>
struct LinearLayerT {
    TensorT<S> weight;  // din x dout
    TensorT<S> bias;    // dout

    LinearLayerT() = default;
    LinearLayerT(int64_t din, int64_t dout, Rng& rng) : weight({din, dout}), bias({dout}) {
        init_uniform(weight, din, rng);
        init_uniform(bias, din, rng);
    }

    TensorT<S> forward(TensorT<S> x) const { return ops::linear(x, weight, bias); }

    void zero() {
        for (auto& v : weight.data()) v = S(0);
        for (auto& v : bias.data()) v = S(0);
    }

    void visit(const std::string& prefix, const ParamVisitor<S>& fn) {
        fn(prefix + ".weight", weight);
        fn(prefix + ".bias", bias);
    }
};

}  // namespace clit
