#include "clit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "clit/threading.hpp"

namespace clit::kernels {

namespace {

inline int64_t clamp_idx(int64_t i, int64_t n) { return std::min(std::max(i, int64_t{0}), n - 1); }

// 4-row panel of the k-serial GEMM inner loop. Accumulation order over k is
// identical in the 4-row and 1-row paths, so results do not depend on how the
// row range was carved up.
template <typename S>
void gemm_nn_rows(const S* a, const S* b, S* c, int64_t row0, int64_t row1, int64_t k, int64_t n,
                  bool accumulate) {
    int64_t m = row0;
    for (; m + 4 <= row1; m += 4) {
        S* c0 = c + m * n;
        S* c1 = c0 + n;
        S* c2 = c1 + n;
        S* c3 = c2 + n;
        if (!accumulate) {
            std::fill(c0, c0 + n, S(0));
            std::fill(c1, c1 + n, S(0));
            std::fill(c2, c2 + n, S(0));
            std::fill(c3, c3 + n, S(0));
        }
        const S* a0 = a + m * k;
        const S* a1 = a0 + k;
        const S* a2 = a1 + k;
        const S* a3 = a2 + k;
        for (int64_t kk = 0; kk < k; ++kk) {
            const S* brow = b + kk * n;
            const S x0 = a0[kk], x1 = a1[kk], x2 = a2[kk], x3 = a3[kk];
            for (int64_t j = 0; j < n; ++j) {
                const S bj = brow[j];
                c0[j] += x0 * bj;
                c1[j] += x1 * bj;
                c2[j] += x2 * bj;
                c3[j] += x3 * bj;
            }
        }
    }
    for (; m < row1; ++m) {
        S* crow = c + m * n;
        if (!accumulate) std::fill(crow, crow + n, S(0));
        const S* arow = a + m * k;
        for (int64_t kk = 0; kk < k; ++kk) {
            const S x = arow[kk];
            const S* brow = b + kk * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += x * brow[j];
        }
    }
}

}  // namespace

template <typename S>
void gemm_nn(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n, bool accumulate) {
    parallel_for(m, [&](int64_t r0, int64_t r1) { gemm_nn_rows(a, b, c, r0, r1, k, n, accumulate); });
}

template <typename S>
void gemm_tn_acc(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    // C[i,j] += sum_kk A[kk,i] * B[kk,j]; split C rows across workers, each
    // worker streams all of A and B but touches only its row slice.
    parallel_for(m, [&](int64_t r0, int64_t r1) {
        for (int64_t kk = 0; kk < k; ++kk) {
            const S* arow = a + kk * m;
            const S* brow = b + kk * n;
            for (int64_t i = r0; i < r1; ++i) {
                const S x = arow[i];
                if (x == S(0)) continue;
                S* crow = c + i * n;
                for (int64_t j = 0; j < n; ++j) crow[j] += x * brow[j];
            }
        }
    });
}

template <typename S>
void gemm_nt(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    // Transpose B once (it is the small operand here) and reuse the panel
    // kernel; a direct dot-product loop cannot vectorize the reduction.
    std::vector<S> bt(static_cast<size_t>(k * n));
    for (int64_t j = 0; j < n; ++j)
        for (int64_t kk = 0; kk < k; ++kk) bt[static_cast<size_t>(kk * n + j)] = b[j * k + kk];
    gemm_nn(a, bt.data(), c, m, k, n, false);
}

template <typename S>
void im2col(const S* in, int64_t h, int64_t w, int64_t ci, int64_t ksize, Padding pad, S* cols) {
    const int64_t p = ksize / 2;
    const int64_t patch = ksize * ksize * ci;
    parallel_for(h, [&](int64_t y0, int64_t y1) {
        for (int64_t y = y0; y < y1; ++y) {
            for (int64_t x = 0; x < w; ++x) {
                S* dst = cols + (y * w + x) * patch;
                for (int64_t dy = 0; dy < ksize; ++dy) {
                    const int64_t yy = y + dy - p;
                    for (int64_t dx = 0; dx < ksize; ++dx) {
                        const int64_t xx = x + dx - p;
                        if (pad == Padding::kZero && (yy < 0 || yy >= h || xx < 0 || xx >= w)) {
                            std::fill(dst, dst + ci, S(0));
                        } else {
                            const int64_t sy = pad == Padding::kZero ? yy : clamp_idx(yy, h);
                            const int64_t sx = pad == Padding::kZero ? xx : clamp_idx(xx, w);
                            std::memcpy(dst, in + (sy * w + sx) * ci, sizeof(S) * static_cast<size_t>(ci));
                        }
                        dst += ci;
                    }
                }
            }
        }
    });
}

template <typename S>
void col2im_acc(const S* cols, int64_t h, int64_t w, int64_t ci, int64_t ksize, Padding pad, S* din) {
    // Scatter with border clamping: kept serial, it is a small fraction of the
    // backward cost and ordering stays reproducible.
    const int64_t p = ksize / 2;
    const int64_t patch = ksize * ksize * ci;
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
            const S* src = cols + (y * w + x) * patch;
            for (int64_t dy = 0; dy < ksize; ++dy) {
                const int64_t yy = y + dy - p;
                for (int64_t dx = 0; dx < ksize; ++dx, src += ci) {
                    const int64_t xx = x + dx - p;
                    if (pad == Padding::kZero && (yy < 0 || yy >= h || xx < 0 || xx >= w)) continue;
                    const int64_t sy = pad == Padding::kZero ? yy : clamp_idx(yy, h);
                    const int64_t sx = pad == Padding::kZero ? xx : clamp_idx(xx, w);
                    S* dst = din + (sy * w + sx) * ci;
                    for (int64_t cc = 0; cc < ci; ++cc) dst[cc] += src[cc];
                }
            }
        }
    }
}

template <typename S>
void add_row_bias(S* out, const S* bias, int64_t rows, int64_t cols) {
    parallel_for(rows, [&](int64_t r0, int64_t r1) {
        for (int64_t r = r0; r < r1; ++r) {
            S* row = out + r * cols;
            for (int64_t j = 0; j < cols; ++j) row[j] += bias[j];
        }
    });
}

template <typename S>
void relu_forward(const S* x, S* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] > S(0) ? x[i] : S(0);
}

template <typename S>
void relu_backward(const S* x, const S* dy, S* dx, int64_t n) {
    for (int64_t i = 0; i < n; ++i)
        if (x[i] > S(0)) dx[i] += dy[i];
}

template <typename S>
void gelu_forward(const S* x, S* y, int64_t n) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    parallel_for(n, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            const double v = static_cast<double>(x[i]);
            y[i] = static_cast<S>(0.5 * v * (1.0 + std::erf(v * inv_sqrt2)));
        }
    });
}

template <typename S>
void gelu_backward(const S* x, const S* dy, S* dx, int64_t n) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    parallel_for(n, [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            const double v = static_cast<double>(x[i]);
            const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
            dx[i] += dy[i] * static_cast<S>(cdf + v * pdf);
        }
    });
}

template <typename S>
void softmax_rows(const S* x, S* y, int64_t rows, int64_t width) {
    parallel_for(rows, [&](int64_t r0, int64_t r1) {
        for (int64_t r = r0; r < r1; ++r) {
            const S* xr = x + r * width;
            S* yr = y + r * width;
            S mx = xr[0];
            for (int64_t j = 1; j < width; ++j) mx = std::max(mx, xr[j]);
            S sum = S(0);
            for (int64_t j = 0; j < width; ++j) {
                yr[j] = std::exp(xr[j] - mx);
                sum += yr[j];
            }
            const S inv = S(1) / sum;
            for (int64_t j = 0; j < width; ++j) yr[j] *= inv;
        }
    });
}

template <typename S>
void softmax_rows_backward(const S* y, const S* dy, S* dx, int64_t rows, int64_t width) {
    parallel_for(rows, [&](int64_t r0, int64_t r1) {
        for (int64_t r = r0; r < r1; ++r) {
            const S* yr = y + r * width;
            const S* dyr = dy + r * width;
            S* dxr = dx + r * width;
            S dot = S(0);
            for (int64_t j = 0; j < width; ++j) dot += yr[j] * dyr[j];
            for (int64_t j = 0; j < width; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
        }
    });
}

template <typename S>
void attend_forward(const S* q, const S* k, const S* v, const S* bias, int64_t n, int64_t g,
                    int64_t c, int64_t heads, S* out, S* weights) {
    const int64_t d = c / heads;
    const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(d)));
    parallel_for(n, [&](int64_t n0, int64_t n1) {
        std::vector<S> logits(static_cast<size_t>(heads * g));
        for (int64_t i = n0; i < n1; ++i) {
            const S* qi = q + i * c;
            const S* ki = k + i * g * c;
            const S* vi = v + i * g * c;
            S* oi = out + i * c;
            // One contiguous pass per k row computes all head dots.
            for (int64_t gg = 0; gg < g; ++gg) {
                const S* krow = ki + gg * c;
                const S* brow = bias ? bias + (i * g + gg) * heads : nullptr;
                for (int64_t hh = 0; hh < heads; ++hh) {
                    const int64_t off = hh * d;
                    S acc = S(0);
                    for (int64_t dd = 0; dd < d; ++dd) acc += qi[off + dd] * krow[off + dd];
                    acc *= scale;
                    if (brow) acc += brow[hh];
                    logits[static_cast<size_t>(hh * g + gg)] = acc;
                }
            }
            softmax_rows(logits.data(), weights + i * heads * g, heads, g);
            const S* wi = weights + i * heads * g;
            for (int64_t j = 0; j < c; ++j) oi[j] = S(0);
            for (int64_t gg = 0; gg < g; ++gg) {
                const S* vrow = vi + gg * c;
                for (int64_t hh = 0; hh < heads; ++hh) {
                    const int64_t off = hh * d;
                    const S wg = wi[hh * g + gg];
                    for (int64_t dd = 0; dd < d; ++dd) oi[off + dd] += wg * vrow[off + dd];
                }
            }
        }
    });
}

template <typename S>
void attend_backward(const S* q, const S* k, const S* v, const S* weights, const S* dout,
                     int64_t n, int64_t g, int64_t c, int64_t heads, S* dq, S* dk, S* dv, S* dbias) {
    const int64_t d = c / heads;
    const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(d)));
    parallel_for(n, [&](int64_t n0, int64_t n1) {
        std::vector<S> dw(static_cast<size_t>(heads * g));
        std::vector<S> dlogit(static_cast<size_t>(heads * g));
        for (int64_t i = n0; i < n1; ++i) {
            const S* qi = q + i * c;
            const S* ki = k + i * g * c;
            const S* vi = v + i * g * c;
            const S* doi = dout + i * c;
            const S* wi = weights + i * heads * g;
            // dw[h,g] = dout_h . v_h[g], one contiguous pass per v row
            for (int64_t gg = 0; gg < g; ++gg) {
                const S* vrow = vi + gg * c;
                for (int64_t hh = 0; hh < heads; ++hh) {
                    const int64_t off = hh * d;
                    S acc = S(0);
                    for (int64_t dd = 0; dd < d; ++dd) acc += doi[off + dd] * vrow[off + dd];
                    dw[static_cast<size_t>(hh * g + gg)] = acc;
                }
            }
            // softmax adjoint per head
            for (int64_t hh = 0; hh < heads; ++hh) {
                const S* wrow = wi + hh * g;
                const S* dwrow = dw.data() + hh * g;
                S dot = S(0);
                for (int64_t gg = 0; gg < g; ++gg) dot += wrow[gg] * dwrow[gg];
                for (int64_t gg = 0; gg < g; ++gg)
                    dlogit[static_cast<size_t>(hh * g + gg)] = wrow[gg] * (dwrow[gg] - dot);
            }
            S* dqi = dq + i * c;
            for (int64_t gg = 0; gg < g; ++gg) {
                const S* krow = ki + gg * c;
                S* dkrow = dk + (i * g + gg) * c;
                S* dvrow = dv + (i * g + gg) * c;
                for (int64_t hh = 0; hh < heads; ++hh) {
                    const int64_t off = hh * d;
                    const S dl = dlogit[static_cast<size_t>(hh * g + gg)] * scale;
                    const S wg = wi[hh * g + gg];
                    for (int64_t dd = 0; dd < d; ++dd) {
                        dqi[off + dd] += dl * krow[off + dd];
                        dkrow[off + dd] += dl * qi[off + dd];
                        dvrow[off + dd] += wg * doi[off + dd];
                    }
                    if (dbias) dbias[(i * g + gg) * heads + hh] += dlogit[static_cast<size_t>(hh * g + gg)];
                }
            }
        }
    });
}

#define CLIT_INSTANTIATE_KERNELS(S)                                                                  \
    template void gemm_nn<S>(const S*, const S*, S*, int64_t, int64_t, int64_t, bool);               \
    template void gemm_tn_acc<S>(const S*, const S*, S*, int64_t, int64_t, int64_t);                 \
    template void gemm_nt<S>(const S*, const S*, S*, int64_t, int64_t, int64_t);                     \
    template void im2col<S>(const S*, int64_t, int64_t, int64_t, int64_t, Padding, S*);              \
    template void col2im_acc<S>(const S*, int64_t, int64_t, int64_t, int64_t, Padding, S*);          \
    template void add_row_bias<S>(S*, const S*, int64_t, int64_t);                                   \
    template void relu_forward<S>(const S*, S*, int64_t);                                            \
    template void relu_backward<S>(const S*, const S*, S*, int64_t);                                 \
    template void gelu_forward<S>(const S*, S*, int64_t);                                            \
    template void gelu_backward<S>(const S*, const S*, S*, int64_t);                                 \
    template void softmax_rows<S>(const S*, S*, int64_t, int64_t);                                   \
    template void softmax_rows_backward<S>(const S*, const S*, S*, int64_t, int64_t);                \
    template void attend_forward<S>(const S*, const S*, const S*, const S*, int64_t, int64_t,        \
                                    int64_t, int64_t, S*, S*);                                       \
    template void attend_backward<S>(const S*, const S*, const S*, const S*, const S*, int64_t,      \
                                     int64_t, int64_t, int64_t, S*, S*, S*, S*);

CLIT_INSTANTIATE_KERNELS(float)
CLIT_INSTANTIATE_KERNELS(double)

#undef CLIT_INSTANTIATE_KERNELS

}  // namespace clit::kernels
