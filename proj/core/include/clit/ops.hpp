#pragma once

#include <memory>
#include <vector>

#include "clit/coords.hpp"
#include "clit/kernels.hpp"
#include "clit/tape.hpp"
#include "clit/tensor.hpp"
#include "clit/threading.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace clit::ops {

// Differentiable operations. Each op computes its value eagerly and, when a
// tape is active and any input is tracked, records a backward closure.
// Tensors passed by value are shared handles; closures keep inputs alive.

// input [H,W,Ci] (+) kernel [k,k,Ci,Co] (+) bias [Co] -> [H,W,Co], same padding.
template <typename S>
TensorT<S> conv2d(TensorT<S> input, TensorT<S> kernel, TensorT<S> bias,
                  Padding pad = Padding::kZero);

// input [N,Din] * weight [Din,Dout] + bias [Dout] -> [N,Dout]
template <typename S>
TensorT<S> linear(TensorT<S> input, TensorT<S> weight, TensorT<S> bias);

template <typename S> TensorT<S> relu(TensorT<S> x);
template <typename S> TensorT<S> gelu(TensorT<S> x);

// Softmax along the last axis.
template <typename S> TensorT<S> softmax(TensorT<S> x);

template <typename S> TensorT<S> add(TensorT<S> a, TensorT<S> b);
template <typename S> TensorT<S> sub(TensorT<S> a, TensorT<S> b);
template <typename S> TensorT<S> mul(TensorT<S> a, TensorT<S> b);
template <typename S> TensorT<S> scale(TensorT<S> a, double factor);
template <typename S> TensorT<S> sum(TensorT<S> x);

// y[...,c] = x[...,c] + shift[c] over the last axis; shift is a constant.
template <typename S> TensorT<S> shift_channels(TensorT<S> x, std::span<const double> shift);

// Mean absolute error over all elements -> scalar.
template <typename S> TensorT<S> l1_loss(TensorT<S> pred, TensorT<S> target);

// 4-neighbor interpolation of grid [H,W,C] at plan's coordinates -> [N,C].
template <typename S> TensorT<S> bilinear_sample(TensorT<S> grid, const SamplePlan& plan);

// grid [H,W,C] -> [ceil(rh*H), ceil(rw*W), C], sampled at the output
// lattice's pixel centers (shares the bilinear_sample path tap for tap).
template <typename S> TensorT<S> bilinear_upsample(TensorT<S> grid, double rh, double rw);
template <typename S> TensorT<S> bilinear_upsample_to(TensorT<S> grid, int64_t out_h, int64_t out_w);

// Row gather: out[n,g,:] = grid[flat[n*G+g], :] for grid [H,W,C] -> [N,G,C].
template <typename S>
TensorT<S> gather_cells(TensorT<S> grid, const std::vector<int64_t>& flat_idx, int64_t n,
                        int64_t g);

// [N,Ca] ++ [N,Cb] -> [N,Ca+Cb]
template <typename S> TensorT<S> concat_cols(TensorT<S> a, TensorT<S> b);

// out[n,:] = a[n,:] * w[n]; w is a constant per-row weight.
template <typename S> TensorT<S> mul_rows(TensorT<S> a, std::span<const double> w);

template <typename S>
struct AttendResult {
    TensorT<S> out;                          // [N,C]
    std::shared_ptr<std::vector<S>> weights; // [N,H,G] attention maps
    int64_t heads = 0, grid = 0;
};

// Multi-head local attention (softmax(q k^T / sqrt(C/H) + B) v per head).
// q [N,C], k/v [N,G,C], bias [N,G,H] (undefined tensor -> no bias).
template <typename S>
AttendResult<S> cslab_attend(TensorT<S> q, TensorT<S> k, TensorT<S> v,
                             TensorT<S> bias, int64_t heads);

// ---------------------------------------------------------------------------
// Implementation

#include <algorithm>
#include <cmath>
#include <cstring>

#include "clit/threading.hpp"

namespace detail {

#ifndef NDEBUG
template <typename S>
void debug_check_finite(TensorT<S> t, const char* op) {
    if (!t.all_finite()) fail(std::string(op) + ": non-finite value in output");
}
#define CLIT_CHECK_FINITE(t, op) debug_check_finite(t, op)
#else
#define CLIT_CHECK_FINITE(t, op) (void)0
#endif

template <typename S>
GradientTapeT<S>* tape_for(std::initializer_list<const TensorT<S>*> inputs) {
    auto* tape = GradientTapeT<S>::active();
    if (!tape) return nullptr;
    for (const auto* t : inputs)
        if (t->defined() && t->tracked()) return tape;
    return nullptr;
}

template <typename S>
void accumulate(TensorT<S> t, const std::vector<S>& delta) {
    auto g = t.grad();
    for (size_t i = 0; i < delta.size(); ++i) g[i] += delta[i];
}

}  // namespace detail

template <typename S>
TensorT<S> conv2d(TensorT<S> input, TensorT<S> kernel, TensorT<S> bias,
                  Padding pad) {
    check(input.rank() == 3, "conv2d: input must be H x W x C_in, got " + shape_str(input.shape()));
    check(kernel.rank() == 4, "conv2d: kernel must be k x k x C_in x C_out, got " + shape_str(kernel.shape()));
    const int64_t h = input.size(0), w = input.size(1), ci = input.size(2);
    const int64_t k = kernel.size(0), co = kernel.size(3);
    check(kernel.size(1) == k, "conv2d: kernel must be square, got " + shape_str(kernel.shape()));
    check(k % 2 == 1, "conv2d: kernel size must be odd, got " + std::to_string(k));
    check(kernel.size(2) == ci, "conv2d: kernel expects " + std::to_string(kernel.size(2)) +
                                    " input channels, input has " + std::to_string(ci));
    check(bias.numel() == co, "conv2d: bias length " + std::to_string(bias.numel()) +
                                  " does not match " + std::to_string(co) + " output channels");

    const int64_t m = h * w;
    const int64_t patch = k * k * ci;
    auto cols = std::make_shared<std::vector<S>>(static_cast<size_t>(m * patch));
    kernels::im2col(input.ptr(), h, w, ci, k, pad, cols->data());

    TensorT<S> out({h, w, co});
    kernels::gemm_nn(cols->data(), kernel.ptr(), out.ptr(), m, patch, co, false);
    kernels::add_row_bias(out.ptr(), bias.ptr(), m, co);
    CLIT_CHECK_FINITE(out, "conv2d");

    if (auto* tape = detail::tape_for<S>({&input, &kernel, &bias})) {
        out.mark_tracked();
        tape->record([input, kernel, bias, out, cols, pad, h, w, ci, k, co, m, patch]() mutable {
            if (!out.has_grad()) return;
            const S* dout = out.grad().data();
            if (bias.tracked()) {
                auto db = bias.grad();
                parallel_for(co, [&](int64_t c0, int64_t c1) {
                    for (int64_t c = c0; c < c1; ++c) {
                        S acc = S(0);
                        for (int64_t r = 0; r < m; ++r) acc += dout[r * co + c];
                        db[c] += acc;
                    }
                });
            }
            if (kernel.tracked()) {
                kernels::gemm_tn_acc(cols->data(), dout, kernel.grad().data(), patch, m, co);
            }
            if (input.tracked()) {
                std::vector<S> dcols(static_cast<size_t>(m * patch));
                kernels::gemm_nt(dout, kernel.ptr(), dcols.data(), m, co, patch);
                kernels::col2im_acc(dcols.data(), h, w, ci, k, pad, input.grad().data());
            }
        });
    }
    return out;
}

template <typename S>
TensorT<S> linear(TensorT<S> input, TensorT<S> weight, TensorT<S> bias) {
    check(input.rank() == 2, "linear: input must be N x D_in, got " + shape_str(input.shape()));
    check(weight.rank() == 2, "linear: weight must be D_in x D_out, got " + shape_str(weight.shape()));
    const int64_t n = input.size(0), din = input.size(1), dout_dim = weight.size(1);
    check(weight.size(0) == din, "linear: weight expects " + std::to_string(weight.size(0)) +
                                     " input features, input has " + std::to_string(din));
    check(bias.numel() == dout_dim, "linear: bias length mismatch");

    TensorT<S> out({n, dout_dim});
    kernels::gemm_nn(input.ptr(), weight.ptr(), out.ptr(), n, din, dout_dim, false);
    kernels::add_row_bias(out.ptr(), bias.ptr(), n, dout_dim);
    CLIT_CHECK_FINITE(out, "linear");

    if (auto* tape = detail::tape_for<S>({&input, &weight, &bias})) {
        out.mark_tracked();
        tape->record([input, weight, bias, out, n, din, dout_dim]() mutable {
            if (!out.has_grad()) return;
            const S* dy = out.grad().data();
            if (bias.tracked()) {
                auto db = bias.grad();
                parallel_for(dout_dim, [&](int64_t c0, int64_t c1) {
                    for (int64_t c = c0; c < c1; ++c) {
                        S acc = S(0);
                        for (int64_t r = 0; r < n; ++r) acc += dy[r * dout_dim + c];
                        db[c] += acc;
                    }
                });
            }
            if (weight.tracked()) {
                kernels::gemm_tn_acc(input.ptr(), dy, weight.grad().data(), din, n, dout_dim);
            }
            if (input.tracked()) {
                std::vector<S> dx(static_cast<size_t>(n * din));
                kernels::gemm_nt(dy, weight.ptr(), dx.data(), n, dout_dim, din);
                detail::accumulate(input, dx);
            }
        });
    }
    return out;
}

template <typename S>
TensorT<S> relu(TensorT<S> x) {
    TensorT<S> out(x.shape());
    kernels::relu_forward(x.ptr(), out.ptr(), x.numel());
    if (auto* tape = detail::tape_for<S>({&x})) {
        out.mark_tracked();
        tape->record([x, out]() mutable {
            if (!out.has_grad() || !x.tracked()) return;
            kernels::relu_backward(x.ptr(), out.grad().data(), x.grad().data(), x.numel());
        });
    }
    return out;
}

template <typename S>
TensorT<S> gelu(TensorT<S> x) {
    TensorT<S> out(x.shape());
    kernels::gelu_forward(x.ptr(), out.ptr(), x.numel());
    CLIT_CHECK_FINITE(out, "gelu");
    if (auto* tape = detail::tape_for<S>({&x})) {
        out.mark_tracked();
        tape->record([x, out]() mutable {
            if (!out.has_grad() || !x.tracked()) return;
            kernels::gelu_backward(x.ptr(), out.grad().data(), x.grad().data(), x.numel());
        });
    }
    return out;
}

template <typename S>
TensorT<S> softmax(TensorT<S> x) {
    check(x.rank() >= 1, "softmax: scalar input");
    const int64_t width = x.size(x.rank() - 1);
    const int64_t rows = x.numel() / width;
    TensorT<S> out(x.shape());
    kernels::softmax_rows(x.ptr(), out.ptr(), rows, width);
    CLIT_CHECK_FINITE(out, "softmax");
    if (auto* tape = detail::tape_for<S>({&x})) {
        out.mark_tracked();
        tape->record([x, out, rows, width]() mutable {
            if (!out.has_grad() || !x.tracked()) return;
            kernels::softmax_rows_backward(out.ptr(), out.grad().data(), x.grad().data(), rows, width);
        });
    }
    return out;
}

namespace detail {

template <typename S, typename Fwd, typename Bwd>
TensorT<S> binary_elementwise(TensorT<S> a, TensorT<S> b, const char* name, Fwd fwd,
                              Bwd bwd) {
    check(a.shape() == b.shape(),
          std::string(name) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    TensorT<S> out(a.shape());
    const S* pa = a.ptr();
    const S* pb = b.ptr();
    S* po = out.ptr();
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i], pb[i]);
    if (auto* tape = detail::tape_for<S>({&a, &b})) {
        out.mark_tracked();
        tape->record([a, b, out, bwd]() mutable {
            if (!out.has_grad()) return;
            auto dy = out.grad();
            const int64_t n = out.numel();
            S* da = (a.tracked()) ? a.grad().data() : nullptr;
            S* db = (b.tracked()) ? b.grad().data() : nullptr;
            const S* pa = a.ptr();
            const S* pb = b.ptr();
            for (int64_t i = 0; i < n; ++i) bwd(pa[i], pb[i], dy[i], da ? da + i : nullptr, db ? db + i : nullptr);
        });
    }
    return out;
}

}  // namespace detail

template <typename S>
TensorT<S> add(TensorT<S> a, TensorT<S> b) {
    return detail::binary_elementwise(
        a, b, "add", [](S x, S y) { return x + y; },
        [](S, S, S dy, S* da, S* db) {
            if (da) *da += dy;
            if (db) *db += dy;
        });
}

template <typename S>
TensorT<S> sub(TensorT<S> a, TensorT<S> b) {
    return detail::binary_elementwise(
        a, b, "sub", [](S x, S y) { return x - y; },
        [](S, S, S dy, S* da, S* db) {
            if (da) *da += dy;
            if (db) *db -= dy;
        });
}

template <typename S>
TensorT<S> mul(TensorT<S> a, TensorT<S> b) {
    return detail::binary_elementwise(
        a, b, "mul", [](S x, S y) { return x * y; },
        [](S x, S y, S dy, S* da, S* db) {
            if (da) *da += dy * y;
            if (db) *db += dy * x;
        });
}

template <typename S>
TensorT<S> scale(TensorT<S> a, double factor) {
    TensorT<S> out(a.shape());
    const S f = static_cast<S>(factor);
    const S* pa = a.ptr();
    S* po = out.ptr();
    for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] * f;
    if (auto* tape = detail::tape_for<S>({&a})) {
        out.mark_tracked();
        tape->record([a, out, f]() mutable {
            if (!out.has_grad() || !a.tracked()) return;
            auto dy = out.grad();
            auto da = a.grad();
            for (int64_t i = 0; i < out.numel(); ++i) da[i] += dy[i] * f;
        });
    }
    return out;
}

template <typename S>
TensorT<S> sum(TensorT<S> x) {
    S acc = S(0);
    for (S v : x.data()) acc += v;
    TensorT<S> out = TensorT<S>::scalar(acc);
    if (auto* tape = detail::tape_for<S>({&x})) {
        out.mark_tracked();
        tape->record([x, out]() mutable {
            if (!out.has_grad() || !x.tracked()) return;
            const S dy = out.grad()[0];
            auto dx = x.grad();
            for (int64_t i = 0; i < x.numel(); ++i) dx[i] += dy;
        });
    }
    return out;
}

template <typename S>
TensorT<S> shift_channels(TensorT<S> x, std::span<const double> shift) {
    const int64_t c = x.size(x.rank() - 1);
    check(static_cast<int64_t>(shift.size()) == c, "shift_channels: shift length mismatch");
    TensorT<S> out(x.shape());
    const S* px = x.ptr();
    S* po = out.ptr();
    const int64_t rows = x.numel() / c;
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < c; ++j) po[r * c + j] = px[r * c + j] + static_cast<S>(shift[j]);
    if (auto* tape = detail::tape_for<S>({&x})) {
        out.mark_tracked();
        tape->record([x, out]() mutable {
            if (!out.has_grad() || !x.tracked()) return;
            detail::accumulate(x, std::vector<S>(out.grad().begin(), out.grad().end()));
        });
    }
    return out;
}

template <typename S>
TensorT<S> l1_loss(TensorT<S> pred, TensorT<S> target) {
    check(pred.shape() == target.shape(), "l1_loss: shape mismatch " + shape_str(pred.shape()) +
                                              " vs " + shape_str(target.shape()));
    const int64_t n = pred.numel();
    const S* pp = pred.ptr();
    const S* pt = target.ptr();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(pp[i]) - static_cast<double>(pt[i]));
    TensorT<S> out = TensorT<S>::scalar(static_cast<S>(acc / static_cast<double>(n)));
    if (auto* tape = detail::tape_for<S>({&pred, &target})) {
        out.mark_tracked();
        tape->record([pred, target, out, n]() mutable {
            if (!out.has_grad()) return;
            const S dy = out.grad()[0];
            const S unit = dy / static_cast<S>(n);
            const S* pp = pred.ptr();
            const S* pt = target.ptr();
            S* dp = pred.tracked() ? pred.grad().data() : nullptr;
            S* dt = target.tracked() ? target.grad().data() : nullptr;
            for (int64_t i = 0; i < n; ++i) {
                const S diff = pp[i] - pt[i];
                const S sign = diff > S(0) ? S(1) : (diff < S(0) ? S(-1) : S(0));
                if (dp) dp[i] += unit * sign;
                if (dt) dt[i] -= unit * sign;
            }
        });
    }
    return out;
}

namespace detail {

// Shared apply/backward for plan-based sampling. A unit tap (weight row
// 1,0,0,0) copies the source row so factor-1 resampling is the identity.
template <typename S>
void apply_plan(const SamplePlan& plan, const S* src, S* dst, int64_t c) {
    parallel_for(plan.n, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            const int64_t* id = plan.idx.data() + 4 * i;
            const double* w = plan.w.data() + 4 * i;
            S* out_row = dst + i * c;
            if (w[0] == 1.0) {
                std::memcpy(out_row, src + id[0] * c, sizeof(S) * static_cast<size_t>(c));
                continue;
            }
            const S w0 = static_cast<S>(w[0]), w1 = static_cast<S>(w[1]);
            const S w2 = static_cast<S>(w[2]), w3 = static_cast<S>(w[3]);
            const S* s0 = src + id[0] * c;
            const S* s1 = src + id[1] * c;
            const S* s2 = src + id[2] * c;
            const S* s3 = src + id[3] * c;
            for (int64_t j = 0; j < c; ++j)
                out_row[j] = w0 * s0[j] + w1 * s1[j] + w2 * s2[j] + w3 * s3[j];
        }
    });
}

template <typename S>
void apply_plan_backward(const SamplePlan& plan, const S* dy, S* dsrc, int64_t c) {
    // Scatter with possible collisions between queries: serial by contract.
    for (int64_t i = 0; i < plan.n; ++i) {
        const int64_t* id = plan.idx.data() + 4 * i;
        const double* w = plan.w.data() + 4 * i;
        const S* drow = dy + i * c;
        for (int64_t t = 0; t < 4; ++t) {
            const S wt = static_cast<S>(w[t]);
            if (wt == S(0)) continue;
            S* grow = dsrc + id[t] * c;
            for (int64_t j = 0; j < c; ++j) grow[j] += wt * drow[j];
        }
    }
}

}  // namespace detail

template <typename S>
TensorT<S> bilinear_sample(TensorT<S> grid, const SamplePlan& plan) {
    check(grid.rank() == 3, "bilinear_sample: grid must be H x W x C, got " + shape_str(grid.shape()));
    check(grid.size(0) == plan.src_h && grid.size(1) == plan.src_w,
          "bilinear_sample: plan was built for " + std::to_string(plan.src_h) + "x" +
              std::to_string(plan.src_w) + ", grid is " + shape_str(grid.shape()));
    const int64_t c = grid.size(2);
    TensorT<S> out({plan.n, c});
    detail::apply_plan(plan, grid.ptr(), out.ptr(), c);
    if (auto* tape = detail::tape_for<S>({&grid})) {
        out.mark_tracked();
        // Plans are copied into the closure; they are small relative to the data.
        tape->record([grid, out, plan, c]() mutable {
            if (!out.has_grad() || !grid.tracked()) return;
            detail::apply_plan_backward(plan, out.grad().data(), grid.grad().data(), c);
        });
    }
    return out;
}

template <typename S>
TensorT<S> bilinear_upsample_to(TensorT<S> grid, int64_t out_h, int64_t out_w) {
    check(grid.rank() == 3, "bilinear_upsample: grid must be H x W x C, got " + shape_str(grid.shape()));
    check(out_h >= 1 && out_w >= 1, "bilinear_upsample: empty output");
    const int64_t c = grid.size(2);
    const QueryBatch lattice = hr_lattice(out_h, out_w);
    const SamplePlan plan = make_sample_plan(grid.size(0), grid.size(1), lattice.coords);
    TensorT<S> flat = bilinear_sample(grid, plan);
    // Re-wrap as an image; share the graph through an explicit identity node.
    TensorT<S> out({out_h, out_w, c}, std::vector<S>(flat.data().begin(), flat.data().end()));
    if (auto* tape = detail::tape_for<S>({&flat})) {
        out.mark_tracked();
        tape->record([flat, out]() mutable {
            if (!out.has_grad() || !flat.tracked()) return;
            detail::accumulate(flat, std::vector<S>(out.grad().begin(), out.grad().end()));
        });
    }
    return out;
}

template <typename S>
TensorT<S> bilinear_upsample(TensorT<S> grid, double rh, double rw) {
    check(rh > 0 && rw > 0, "bilinear_upsample: factors must be positive");
    const int64_t out_h = static_cast<int64_t>(std::ceil(rh * static_cast<double>(grid.size(0)) - 1e-9));
    const int64_t out_w = static_cast<int64_t>(std::ceil(rw * static_cast<double>(grid.size(1)) - 1e-9));
    return bilinear_upsample_to(grid, out_h, out_w);
}

template <typename S>
TensorT<S> gather_cells(TensorT<S> grid, const std::vector<int64_t>& flat_idx, int64_t n,
                        int64_t g) {
    check(grid.rank() == 3, "gather_cells: grid must be H x W x C");
    check(static_cast<int64_t>(flat_idx.size()) == n * g, "gather_cells: index count mismatch");
    const int64_t c = grid.size(2);
    const int64_t cells = grid.size(0) * grid.size(1);
    for (int64_t id : flat_idx)
        check(id >= 0 && id < cells, "gather_cells: index " + std::to_string(id) + " out of range");
    TensorT<S> out({n, g, c});
    const S* src = grid.ptr();
    S* dst = out.ptr();
    parallel_for(n * g, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            const int64_t id = flat_idx[static_cast<size_t>(i)];
            std::memcpy(dst + i * c, src + id * c, sizeof(S) * static_cast<size_t>(c));
        }
    });
    if (auto* tape = detail::tape_for<S>({&grid})) {
        out.mark_tracked();
        auto idx = std::make_shared<std::vector<int64_t>>(flat_idx);
        tape->record([grid, out, idx, n, g, c]() mutable {
            if (!out.has_grad() || !grid.tracked()) return;
            const S* dy = out.grad().data();
            S* dg = grid.grad().data();
            for (int64_t i = 0; i < n * g; ++i) {
                S* grow = dg + (*idx)[static_cast<size_t>(i)] * c;
                const S* drow = dy + i * c;
                for (int64_t j = 0; j < c; ++j) grow[j] += drow[j];
            }
        });
    }
    return out;
}

template <typename S>
TensorT<S> concat_cols(TensorT<S> a, TensorT<S> b) {
    check(a.rank() == 2 && b.rank() == 2 && a.size(0) == b.size(0),
          "concat_cols: need two matrices with equal row counts, got " + shape_str(a.shape()) +
              " and " + shape_str(b.shape()));
    const int64_t n = a.size(0), ca = a.size(1), cb = b.size(1);
    TensorT<S> out({n, ca + cb});
    const S* pa = a.ptr();
    const S* pb = b.ptr();
    S* po = out.ptr();
    for (int64_t r = 0; r < n; ++r) {
        std::memcpy(po + r * (ca + cb), pa + r * ca, sizeof(S) * static_cast<size_t>(ca));
        std::memcpy(po + r * (ca + cb) + ca, pb + r * cb, sizeof(S) * static_cast<size_t>(cb));
    }
    if (auto* tape = detail::tape_for<S>({&a, &b})) {
        out.mark_tracked();
        tape->record([a, b, out, n, ca, cb]() mutable {
            if (!out.has_grad()) return;
            const S* dy = out.grad().data();
            if (a.tracked()) {
                S* da = a.grad().data();
                for (int64_t r = 0; r < n; ++r)
                    for (int64_t j = 0; j < ca; ++j) da[r * ca + j] += dy[r * (ca + cb) + j];
            }
            if (b.tracked()) {
                S* db = b.grad().data();
                for (int64_t r = 0; r < n; ++r)
                    for (int64_t j = 0; j < cb; ++j) db[r * cb + j] += dy[r * (ca + cb) + ca + j];
            }
        });
    }
    return out;
}

template <typename S>
TensorT<S> mul_rows(TensorT<S> a, std::span<const double> w) {
    check(a.rank() == 2, "mul_rows: input must be a matrix");
    const int64_t n = a.size(0), c = a.size(1);
    check(static_cast<int64_t>(w.size()) == n, "mul_rows: weight count mismatch");
    TensorT<S> out(a.shape());
    const S* pa = a.ptr();
    S* po = out.ptr();
    for (int64_t r = 0; r < n; ++r) {
        const S wr = static_cast<S>(w[r]);
        for (int64_t j = 0; j < c; ++j) po[r * c + j] = pa[r * c + j] * wr;
    }
    if (auto* tape = detail::tape_for<S>({&a})) {
        out.mark_tracked();
        auto wcopy = std::make_shared<std::vector<double>>(w.begin(), w.end());
        tape->record([a, out, wcopy, n, c]() mutable {
            if (!out.has_grad() || !a.tracked()) return;
            const S* dy = out.grad().data();
            S* da = a.grad().data();
            for (int64_t r = 0; r < n; ++r) {
                const S wr = static_cast<S>((*wcopy)[static_cast<size_t>(r)]);
                for (int64_t j = 0; j < c; ++j) da[r * c + j] += dy[r * c + j] * wr;
            }
        });
    }
    return out;
}

template <typename S>
AttendResult<S> cslab_attend(TensorT<S> q, TensorT<S> k, TensorT<S> v,
                             TensorT<S> bias, int64_t heads) {
    check(q.rank() == 2, "cslab_attend: q must be N x C, got " + shape_str(q.shape()));
    check(k.rank() == 3 && v.rank() == 3, "cslab_attend: k and v must be N x G x C");
    const int64_t n = q.size(0), c = q.size(1), g = k.size(1);
    check(g >= 1, "cslab_attend: empty local grid");
    check(k.shape() == v.shape() && k.size(0) == n && k.size(2) == c,
          "cslab_attend: k/v shape mismatch with q: " + shape_str(k.shape()));
    check(heads >= 1 && c % heads == 0,
          "cslab_attend: channels " + std::to_string(c) + " not divisible by heads " + std::to_string(heads));
    const bool has_bias = bias.defined();
    if (has_bias) {
        // Accepts [N,G,H] or the flat [N*G,H] a fully-connected layer yields.
        const bool rank3_ok =
            bias.rank() == 3 && bias.size(0) == n && bias.size(1) == g && bias.size(2) == heads;
        const bool rank2_ok = bias.rank() == 2 && bias.size(0) == n * g && bias.size(1) == heads;
        check(rank3_ok || rank2_ok,
              "cslab_attend: bias must be N x G x H (or flat N*G x H), got " + shape_str(bias.shape()));
    }

    AttendResult<S> res;
    res.heads = heads;
    res.grid = g;
    res.weights = std::make_shared<std::vector<S>>(static_cast<size_t>(n * heads * g));
    res.out = TensorT<S>({n, c});
    kernels::attend_forward(q.ptr(), k.ptr(), v.ptr(), has_bias ? bias.ptr() : nullptr, n, g, c,
                            heads, res.out.ptr(), res.weights->data());
    CLIT_CHECK_FINITE(res.out, "cslab_attend");

    auto* tape = has_bias ? detail::tape_for<S>({&q, &k, &v, &bias})
                          : detail::tape_for<S>({&q, &k, &v});
    if (tape) {
        res.out.mark_tracked();
        TensorT<S> out = res.out;
        auto weights = res.weights;
        TensorT<S> biasc = bias;
        tape->record([q, k, v, biasc, out, weights, n, g, c, heads, has_bias]() mutable {
            if (!out.has_grad()) return;
            // The kernel accumulates into all adjoints at once; untracked
            // inputs get scratch buffers that are simply dropped.
            auto ensure = [](TensorT<S> t, std::vector<S>& scratch, int64_t len) -> S* {
                if (t.defined() && t.tracked()) return t.grad().data();
                scratch.assign(static_cast<size_t>(len), S(0));
                return scratch.data();
            };
            std::vector<S> sq, sk, sv, sb;
            S* dq = ensure(q, sq, n * c);
            S* dk = ensure(k, sk, n * g * c);
            S* dv = ensure(v, sv, n * g * c);
            S* db = has_bias ? ensure(biasc, sb, n * g * heads) : nullptr;
            kernels::attend_backward(q.ptr(), k.ptr(), v.ptr(), weights->data(), out.grad().data(),
                                     n, g, c, heads, dq, dk, dv, db);
        });
    }
    return res;
}


}  // namespace clit::ops
