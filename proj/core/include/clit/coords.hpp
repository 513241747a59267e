#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "clit/tensor.hpp"

namespace clit {

// Coordinate convention, fixed project-wide: every image axis is normalized
// to [-1, 1] and pixel i of an axis of size n has its center at
// -1 + (2i+1)/n. All sampling, local grids and relative offsets derive from
// this one definition.

inline double axis_center(int64_t i, int64_t n) {
    return -1.0 + static_cast<double>(2 * i + 1) / static_cast<double>(n);
}

// Pixel pitch of an axis of size n.
inline double axis_pitch(int64_t n) { return 2.0 / static_cast<double>(n); }

// Continuous (fractional) pixel index of a normalized coordinate.
inline double continuous_index(double coord, int64_t n) {
    return (coord + 1.0) * 0.5 * static_cast<double>(n) - 0.5;
}

// Index of the nearest pixel center, ties broken toward the smaller index,
// clamped to the axis. Indices within 1e-9 of a half-integer snap to it so
// the tie-break is stable against the normalized-coordinate round trip.
inline int64_t nearest_index(double coord, int64_t n) {
    double t = continuous_index(coord, n);
    const double half_snapped = std::nearbyint(2.0 * t) * 0.5;
    if (std::abs(t - half_snapped) < 1e-9) t = half_snapped;
    int64_t i = static_cast<int64_t>(std::ceil(t - 0.5));
    if (i < 0) i = 0;
    if (i >= n) i = n - 1;
    return i;
}

// Normalized height/width of one output pixel.
struct Cell {
    double h = 2.0;
    double w = 2.0;
};

// A batch of normalized (y, x) query coordinates sharing one cell size.
struct QueryBatch {
    std::vector<double> coords;  // 2*n, row-major (y, x) pairs
    Cell cell;

    int64_t size() const { return static_cast<int64_t>(coords.size() / 2); }
};

// Row-major pixel centers of an out_h x out_w lattice, cell = (2/H, 2/W).
QueryBatch hr_lattice(int64_t out_h, int64_t out_w);

// Per-query local grid on the LR lattice: gather indices are clamped to the
// image border, while the relative offsets keep the ideal (unclamped) grid
// geometry so the positional bias sees true distances.
struct LocalGrid {
    int64_t gh = 0, gw = 0;
    std::vector<int64_t> indices;  // n*G flat spatial indices (y*w + x), clamped
    std::vector<double> delta;     // n*G*2 offsets (dy, dx) = x_q - x_grid
};

// Anchors each query's grid at the LR center nearest to it.
LocalGrid make_local_grid(std::span<const double> coords_yx, int64_t lr_h, int64_t lr_w,
                          int64_t gh, int64_t gw);

// Same, with explicit per-query anchor indices (local-ensemble evaluation).
LocalGrid make_local_grid_anchored(std::span<const double> coords_yx, int64_t lr_h, int64_t lr_w,
                                   int64_t gh, int64_t gw, std::span<const int64_t> anchors_yx);

// Precomputed 4-neighbor bilinear taps for a set of normalized coordinates.
// Out-of-range coordinates clamp to the border.
struct SamplePlan {
    int64_t src_h = 0, src_w = 0;
    int64_t n = 0;
    std::vector<int64_t> idx;  // n*4 flat spatial indices
    std::vector<double> w;     // n*4 weights, each row sums to 1
};

SamplePlan make_sample_plan(int64_t src_h, int64_t src_w, std::span<const double> coords_yx);

// Frequency encoding gamma: for each (dy, dx) pair a row
// [sin(2^0 dy), cos(2^0 dy), ..., sin(2^{L-1} dy), cos(2^{L-1} dy),
//  sin(2^0 dx), ..., cos(2^{L-1} dx)] of width 4L.
void freq_encode(std::span<const double> delta_yx, int64_t bands, std::span<double> out);

template <typename S>
TensorT<S> freq_encode_tensor(std::span<const double> delta_yx, int64_t bands);

}  // namespace clit
