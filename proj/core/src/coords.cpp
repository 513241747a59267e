#include "clit/coords.hpp"

#include <algorithm>
#include <cmath>

namespace clit {

QueryBatch hr_lattice(int64_t out_h, int64_t out_w) {
    check(out_h >= 1 && out_w >= 1, "hr_lattice: output dims must be positive");
    QueryBatch q;
    q.coords.resize(static_cast<size_t>(2 * out_h * out_w));
    size_t at = 0;
    for (int64_t y = 0; y < out_h; ++y) {
        const double cy = axis_center(y, out_h);
        for (int64_t x = 0; x < out_w; ++x) {
            q.coords[at++] = cy;
            q.coords[at++] = axis_center(x, out_w);
        }
    }
    q.cell = Cell{axis_pitch(out_h), axis_pitch(out_w)};
    return q;
}

namespace {

LocalGrid build_grid(std::span<const double> coords_yx, int64_t lr_h, int64_t lr_w, int64_t gh,
                     int64_t gw, const int64_t* anchors_yx) {
    check(gh >= 1 && gw >= 1 && gh % 2 == 1 && gw % 2 == 1,
          "local_grid: grid dims must be odd positive, got " + std::to_string(gh) + "x" + std::to_string(gw));
    check(lr_h >= 1 && lr_w >= 1, "local_grid: empty source grid");
    const int64_t n = static_cast<int64_t>(coords_yx.size() / 2);
    LocalGrid grid;
    grid.gh = gh;
    grid.gw = gw;
    grid.indices.resize(static_cast<size_t>(n * gh * gw));
    grid.delta.resize(static_cast<size_t>(n * gh * gw * 2));
    const int64_t hy = gh / 2;
    const int64_t hx = gw / 2;
    for (int64_t i = 0; i < n; ++i) {
        const double qy = coords_yx[static_cast<size_t>(2 * i)];
        const double qx = coords_yx[static_cast<size_t>(2 * i + 1)];
        const int64_t cy = anchors_yx ? anchors_yx[2 * i] : nearest_index(qy, lr_h);
        const int64_t cx = anchors_yx ? anchors_yx[2 * i + 1] : nearest_index(qx, lr_w);
        for (int64_t dy = 0; dy < gh; ++dy) {
            const int64_t iy = cy - hy + dy;  // ideal row, may fall off the image
            const int64_t ry = std::clamp<int64_t>(iy, 0, lr_h - 1);
            for (int64_t dx = 0; dx < gw; ++dx) {
                const int64_t ix = cx - hx + dx;
                const int64_t rx = std::clamp<int64_t>(ix, 0, lr_w - 1);
                const int64_t at = (i * gh + dy) * gw + dx;
                grid.indices[static_cast<size_t>(at)] = ry * lr_w + rx;
                grid.delta[static_cast<size_t>(2 * at)] = qy - axis_center(iy, lr_h);
                grid.delta[static_cast<size_t>(2 * at + 1)] = qx - axis_center(ix, lr_w);
            }
        }
    }
    return grid;
}

}  // namespace

LocalGrid make_local_grid(std::span<const double> coords_yx, int64_t lr_h, int64_t lr_w, int64_t gh,
                          int64_t gw) {
    return build_grid(coords_yx, lr_h, lr_w, gh, gw, nullptr);
}

LocalGrid make_local_grid_anchored(std::span<const double> coords_yx, int64_t lr_h, int64_t lr_w,
                                   int64_t gh, int64_t gw, std::span<const int64_t> anchors_yx) {
    check(anchors_yx.size() == coords_yx.size(), "local_grid: anchor count mismatch");
    return build_grid(coords_yx, lr_h, lr_w, gh, gw, anchors_yx.data());
}

SamplePlan make_sample_plan(int64_t src_h, int64_t src_w, std::span<const double> coords_yx) {
    check(src_h >= 1 && src_w >= 1, "bilinear_sample: empty source grid");
    SamplePlan plan;
    plan.src_h = src_h;
    plan.src_w = src_w;
    plan.n = static_cast<int64_t>(coords_yx.size() / 2);
    plan.idx.resize(static_cast<size_t>(plan.n * 4));
    plan.w.resize(static_cast<size_t>(plan.n * 4));
    for (int64_t i = 0; i < plan.n; ++i) {
        // Clamp the continuous index to the center range first, so points at
        // or beyond the border take the border value. Indices within 1e-9 of
        // an integer snap to it: queries meant to land on a pixel center hit
        // it exactly despite the normalized-coordinate round trip.
        double ty = continuous_index(coords_yx[static_cast<size_t>(2 * i)], src_h);
        double tx = continuous_index(coords_yx[static_cast<size_t>(2 * i + 1)], src_w);
        ty = std::clamp(ty, 0.0, static_cast<double>(src_h - 1));
        tx = std::clamp(tx, 0.0, static_cast<double>(src_w - 1));
        if (std::abs(ty - std::nearbyint(ty)) < 1e-9) ty = std::nearbyint(ty);
        if (std::abs(tx - std::nearbyint(tx)) < 1e-9) tx = std::nearbyint(tx);
        const int64_t y0 = static_cast<int64_t>(ty);
        const int64_t x0 = static_cast<int64_t>(tx);
        const int64_t y1 = std::min(y0 + 1, src_h - 1);
        const int64_t x1 = std::min(x0 + 1, src_w - 1);
        const double fy = ty - static_cast<double>(y0);
        const double fx = tx - static_cast<double>(x0);
        const size_t at = static_cast<size_t>(4 * i);
        plan.idx[at + 0] = y0 * src_w + x0;
        plan.idx[at + 1] = y0 * src_w + x1;
        plan.idx[at + 2] = y1 * src_w + x0;
        plan.idx[at + 3] = y1 * src_w + x1;
        plan.w[at + 0] = (1.0 - fy) * (1.0 - fx);
        plan.w[at + 1] = (1.0 - fy) * fx;
        plan.w[at + 2] = fy * (1.0 - fx);
        plan.w[at + 3] = fy * fx;
    }
    return plan;
}

void freq_encode(std::span<const double> delta_yx, int64_t bands, std::span<double> out) {
    check(bands >= 1, "freq_encode: need at least one band");
    const int64_t n = static_cast<int64_t>(delta_yx.size() / 2);
    const int64_t width = 4 * bands;
    check(static_cast<int64_t>(out.size()) == n * width, "freq_encode: bad output size");
    for (int64_t i = 0; i < n; ++i) {
        double* row = out.data() + i * width;
        for (int64_t comp = 0; comp < 2; ++comp) {
            const double d = delta_yx[static_cast<size_t>(2 * i + comp)];
            // Double-angle recurrence: one sincos per component instead of
            // one per band. Error stays near machine precision for the small
            // offsets local grids produce.
            double s = std::sin(d);
            double cc = std::cos(d);
            for (int64_t b = 0; b < bands; ++b) {
                row[comp * 2 * bands + 2 * b + 0] = s;
                row[comp * 2 * bands + 2 * b + 1] = cc;
                const double s2 = 2.0 * s * cc;
                cc = cc * cc - s * s;
                s = s2;
            }
        }
    }
}

template <typename S>
TensorT<S> freq_encode_tensor(std::span<const double> delta_yx, int64_t bands) {
    const int64_t n = static_cast<int64_t>(delta_yx.size() / 2);
    std::vector<double> buf(static_cast<size_t>(n * 4 * bands));
    freq_encode(delta_yx, bands, buf);
    TensorT<S> t({n, 4 * bands});
    auto dst = t.data();
    for (size_t i = 0; i < buf.size(); ++i) dst[i] = static_cast<S>(buf[i]);
    return t;
}

template TensorT<float> freq_encode_tensor<float>(std::span<const double>, int64_t);
template TensorT<double> freq_encode_tensor<double>(std::span<const double>, int64_t);

}  // namespace clit
