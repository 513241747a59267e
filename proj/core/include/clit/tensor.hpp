#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "clit/common.hpp"

namespace clit {

// Dense row-major N-d array of Scalar plus the autodiff bookkeeping the tape
// needs. TensorT is a cheap shared handle: copies alias the same storage, so
// gradients accumulate per logical tensor no matter how many handles exist.
template <typename Scalar>
struct TensorStorageT {
    Shape shape;
    std::vector<Scalar> value;
    std::vector<Scalar> grad;  // allocated on first use
    bool requires_grad = false;
    bool tracked = false;  // requires_grad, or computed from a tracked input
};

template <typename Scalar>
class TensorT {
public:
    using scalar_type = Scalar;

    TensorT() = default;

    explicit TensorT(Shape shape) : s_(std::make_shared<TensorStorageT<Scalar>>()) {
        const int64_t n = clit::numel(shape);
        check(n >= 0, "Tensor: negative dimension in shape " + shape_str(shape));
        for (int64_t d : shape) check(d > 0, "Tensor: non-positive dimension in shape " + shape_str(shape));
        s_->shape = std::move(shape);
        s_->value.assign(static_cast<size_t>(n), Scalar(0));
    }

    TensorT(Shape shape, std::vector<Scalar> data) : s_(std::make_shared<TensorStorageT<Scalar>>()) {
        check(clit::numel(shape) == static_cast<int64_t>(data.size()),
              "Tensor: data length " + std::to_string(data.size()) + " does not match shape " + shape_str(shape));
        s_->shape = std::move(shape);
        s_->value = std::move(data);
    }

    static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

    static TensorT full(Shape shape, Scalar v) {
        TensorT t(std::move(shape));
        for (auto& x : t.s_->value) x = v;
        return t;
    }

    static TensorT scalar(Scalar v) { return TensorT({1}, {v}); }

    bool defined() const { return static_cast<bool>(s_); }
    const Shape& shape() const { return s_->shape; }
    int64_t rank() const { return static_cast<int64_t>(s_->shape.size()); }
    int64_t size(int64_t dim) const { return s_->shape[static_cast<size_t>(dim)]; }
    int64_t numel() const { return static_cast<int64_t>(s_->value.size()); }

    std::span<Scalar> data() { return s_->value; }
    std::span<const Scalar> data() const { return s_->value; }
    Scalar* ptr() { return s_->value.data(); }
    const Scalar* ptr() const { return s_->value.data(); }

    Scalar item() const {
        check(numel() == 1, "Tensor::item: tensor has " + std::to_string(numel()) + " elements");
        return s_->value[0];
    }

    bool requires_grad() const { return s_->requires_grad; }
    bool tracked() const { return s_->tracked; }

    TensorT& set_requires_grad(bool b) {
        s_->requires_grad = b;
        s_->tracked = s_->tracked || b;
        return *this;
    }

    void mark_tracked() { s_->tracked = true; }

    bool has_grad() const { return !s_->grad.empty(); }

    // Grad buffer, zero-initialized on first access.
    std::span<Scalar> grad() {
        if (s_->grad.empty()) s_->grad.assign(s_->value.size(), Scalar(0));
        return s_->grad;
    }
    std::span<const Scalar> grad() const {
        check(!s_->grad.empty(), "Tensor::grad: no gradient has been accumulated");
        return s_->grad;
    }

    void zero_grad() {
        for (auto& g : s_->grad) g = Scalar(0);
    }

    // Same storage object (aliasing identity, not value equality).
    bool is(const TensorT& other) const { return s_ == other.s_; }

    std::shared_ptr<TensorStorageT<Scalar>> storage() const { return s_; }

    TensorT clone() const {
        TensorT t;
        t.s_ = std::make_shared<TensorStorageT<Scalar>>(*s_);
        return t;
    }

    bool all_finite() const {
        for (Scalar v : s_->value)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

private:
    std::shared_ptr<TensorStorageT<Scalar>> s_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

}  // namespace clit
