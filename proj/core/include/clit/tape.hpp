#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "clit/tensor.hpp"

namespace clit {

// Define-by-run reverse-mode tape. Ops executed while a tape is active record
// a backward closure; backward() replays the closures once each, in reverse
// execution order. Gradients accumulate additively on the tensors themselves,
// so fan-out works without any extra bookkeeping.
//
// Recording is single-threaded by contract (one model instance trains on one
// thread); the kernels inside an op may still use the worker pool.
template <typename Scalar>
class GradientTapeT {
public:
    GradientTapeT() = default;
    GradientTapeT(const GradientTapeT&) = delete;
    GradientTapeT& operator=(const GradientTapeT&) = delete;

    static GradientTapeT* active() { return active_; }

    void record(std::function<void()> backward) { nodes_.push_back(std::move(backward)); }

    size_t num_nodes() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and walks the recorded ops exactly once, in
    // reverse. The tape stays intact; call clear() before the next step.
    void backward(TensorT<Scalar>& loss) {
        check(loss.numel() == 1, "backward: loss must be scalar, got " + shape_str(loss.shape()));
        check(loss.tracked(), "backward: loss does not depend on any tracked tensor");
        loss.grad()[0] += Scalar(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    void clear() { nodes_.clear(); }

    // Named parameter registry. Registration order is the canonical parameter
    // order everywhere (optimizer state, checkpoints, gradient reports).
    void register_parameter(const std::string& name, TensorT<Scalar> t) {
        t.set_requires_grad(true);
        params_.emplace_back(name, std::move(t));
    }

    std::vector<std::pair<std::string, TensorT<Scalar>>>& parameters() { return params_; }
    const std::vector<std::pair<std::string, TensorT<Scalar>>>& parameters() const { return params_; }

    void zero_grad() {
        for (auto& [name, t] : params_) t.zero_grad();
    }

private:
    template <typename S>
    friend class TapeScopeT;

    static inline thread_local GradientTapeT* active_ = nullptr;

    std::vector<std::function<void()>> nodes_;
    std::vector<std::pair<std::string, TensorT<Scalar>>> params_;
};

// RAII activation of a tape on the current thread.
template <typename Scalar>
class TapeScopeT {
public:
    explicit TapeScopeT(GradientTapeT<Scalar>& tape) : prev_(GradientTapeT<Scalar>::active_) {
        GradientTapeT<Scalar>::active_ = &tape;
    }
    ~TapeScopeT() { GradientTapeT<Scalar>::active_ = prev_; }
    TapeScopeT(const TapeScopeT&) = delete;
    TapeScopeT& operator=(const TapeScopeT&) = delete;

private:
    GradientTapeT<Scalar>* prev_;
};

using GradientTape = GradientTapeT<float>;
using TapeScope = TapeScopeT<float>;

}  // namespace clit
