#pragma once

#include <cstdint>

namespace clit {

enum class Padding { kZero, kReplicate };

// Plain compute kernels behind the tape ops. All matrices are row-major and
// dense. Every kernel accumulates strictly in index order per output element,
// and the pool only ever splits independent output ranges, so results do not
// depend on the worker count.
namespace kernels {

// C[M,N] = (accumulate ? C : 0) + A[M,K] * B[K,N]
template <typename S>
void gemm_nn(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n, bool accumulate);

// C[M,N] += A[K,M]^T * B[K,N]  (A stored K x M; used for weight gradients)
template <typename S>
void gemm_tn_acc(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n);

// C[M,N] = A[M,K] * B[N,K]^T  (B stored N x K; used for input gradients)
template <typename S>
void gemm_nt(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n);

// cols[H*W, k*k*ci], column index ((dy*k)+dx)*ci + c. Border handling per pad.
template <typename S>
void im2col(const S* in, int64_t h, int64_t w, int64_t ci, int64_t ksize, Padding pad, S* cols);

// Scatter-add of the im2col adjoint back onto the input gradient.
template <typename S>
void col2im_acc(const S* cols, int64_t h, int64_t w, int64_t ci, int64_t ksize, Padding pad, S* din);

template <typename S>
void add_row_bias(S* out, const S* bias, int64_t rows, int64_t cols);

// Elementwise activations. dx accumulates.
template <typename S> void relu_forward(const S* x, S* y, int64_t n);
template <typename S> void relu_backward(const S* x, const S* dy, S* dx, int64_t n);
// Exact erf-based GELU.
template <typename S> void gelu_forward(const S* x, S* y, int64_t n);
template <typename S> void gelu_backward(const S* x, const S* dy, S* dx, int64_t n);

// Row-wise softmax with max-subtraction, rows x width.
template <typename S> void softmax_rows(const S* x, S* y, int64_t rows, int64_t width);
template <typename S>
void softmax_rows_backward(const S* y, const S* dy, S* dx, int64_t rows, int64_t width);

// Multi-head local attention. q [N,C], k/v [N,G,C], bias [N,G,H] or null.
// Per head: softmax(q_h . k_h / sqrt(C/H) + b_h) weights, then weighted sum
// of v_h. weights [N,H,G] must be provided; it is both a saved intermediate
// for the backward pass and the attention-map capture surface.
template <typename S>
void attend_forward(const S* q, const S* k, const S* v, const S* bias, int64_t n, int64_t g,
                    int64_t c, int64_t heads, S* out, S* weights);

// Gradients accumulate into dq/dk/dv/dbias (dbias may be null iff bias was).
template <typename S>
void attend_backward(const S* q, const S* k, const S* v, const S* weights, const S* dout,
                     int64_t n, int64_t g, int64_t c, int64_t heads, S* dq, S* dk, S* dv, S* dbias);

}  // namespace kernels
}  // namespace clit
