#include "clit/resize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "clit/threading.hpp"

namespace clit {

namespace {

// Catmull-Rom-family cubic, a = -0.5.
double cubic(double x) {
    x = std::abs(x);
    if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * (x * x * x - 5.0 * x * x + 8.0 * x - 4.0);
    return 0.0;
}

struct AxisPlan {
    int64_t taps = 0;
    std::vector<int64_t> idx;  // out * taps, clamped source indices
    std::vector<double> w;     // out * taps, rows normalized to 1
};

AxisPlan plan_axis(int64_t in, int64_t out) {
    const double scale = static_cast<double>(out) / static_cast<double>(in);
    const double kscale = std::min(scale, 1.0);  // kernel stretch when minifying
    const double support = 2.0 / kscale;
    AxisPlan plan;
    plan.taps = static_cast<int64_t>(std::ceil(2.0 * support)) + 2;
    plan.idx.resize(static_cast<size_t>(out * plan.taps));
    plan.w.resize(static_cast<size_t>(out * plan.taps));
    for (int64_t j = 0; j < out; ++j) {
        const double center = (static_cast<double>(j) + 0.5) / scale - 0.5;
        const int64_t left = static_cast<int64_t>(std::floor(center - support)) + 1;
        double sum = 0.0;
        for (int64_t t = 0; t < plan.taps; ++t) {
            const int64_t i = left + t;
            const double weight = cubic((center - static_cast<double>(i)) * kscale) * kscale;
            plan.idx[static_cast<size_t>(j * plan.taps + t)] = std::clamp<int64_t>(i, 0, in - 1);
            plan.w[static_cast<size_t>(j * plan.taps + t)] = weight;
            sum += weight;
        }
        for (int64_t t = 0; t < plan.taps; ++t) plan.w[static_cast<size_t>(j * plan.taps + t)] /= sum;
    }
    return plan;
}

}  // namespace

Tensor resize_bicubic(const Tensor& image, int64_t out_h, int64_t out_w) {
    check(image.rank() == 3, "resize_bicubic: expected H x W x C, got " + shape_str(image.shape()));
    check(out_h >= 1 && out_w >= 1, "resize_bicubic: empty output");
    const int64_t h = image.size(0), w = image.size(1), c = image.size(2);

    const AxisPlan rows = plan_axis(h, out_h);
    const AxisPlan cols = plan_axis(w, out_w);

    // rows pass: [h, w, c] -> [out_h, w, c], accumulate in double
    std::vector<double> mid(static_cast<size_t>(out_h * w * c));
    const auto src = image.data();
    parallel_for(out_h, [&](int64_t y0, int64_t y1) {
        for (int64_t y = y0; y < y1; ++y) {
            for (int64_t x = 0; x < w; ++x) {
                for (int64_t ch = 0; ch < c; ++ch) {
                    double acc = 0.0;
                    for (int64_t t = 0; t < rows.taps; ++t) {
                        const int64_t sy = rows.idx[static_cast<size_t>(y * rows.taps + t)];
                        acc += rows.w[static_cast<size_t>(y * rows.taps + t)] *
                               static_cast<double>(src[(sy * w + x) * c + ch]);
                    }
                    mid[static_cast<size_t>((y * w + x) * c + ch)] = acc;
                }
            }
        }
    });

    Tensor out({out_h, out_w, c});
    auto dst = out.data();
    parallel_for(out_h, [&](int64_t y0, int64_t y1) {
        for (int64_t y = y0; y < y1; ++y) {
            for (int64_t x = 0; x < out_w; ++x) {
                for (int64_t ch = 0; ch < c; ++ch) {
                    double acc = 0.0;
                    for (int64_t t = 0; t < cols.taps; ++t) {
                        const int64_t sx = cols.idx[static_cast<size_t>(x * cols.taps + t)];
                        acc += cols.w[static_cast<size_t>(x * cols.taps + t)] *
                               mid[static_cast<size_t>((y * w + sx) * c + ch)];
                    }
                    dst[(y * out_w + x) * c + ch] = static_cast<float>(acc);
                }
            }
        }
    });
    return out;
}

Tensor bicubic_upsample(const Tensor& image, double rh, double rw) {
    check(rh > 0.0 && rw > 0.0, "bicubic_upsample: factors must be positive");
    const int64_t oh = static_cast<int64_t>(std::ceil(rh * static_cast<double>(image.size(0)) - 1e-9));
    const int64_t ow = static_cast<int64_t>(std::ceil(rw * static_cast<double>(image.size(1)) - 1e-9));
    return resize_bicubic(image, oh, ow);
}

}  // namespace clit
