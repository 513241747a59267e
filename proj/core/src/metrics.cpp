#include "clit/metrics.hpp"

#include <cmath>
#include <limits>

namespace clit {

Tensor rgb_to_luma(const Tensor& rgb) {
    check(rgb.rank() == 3 && rgb.size(2) == 3, "rgb_to_luma: expected H x W x 3");
    const int64_t h = rgb.size(0), w = rgb.size(1);
    Tensor y({h, w, 1});
    const auto src = rgb.data();
    auto dst = y.data();
    for (int64_t p = 0; p < h * w; ++p) {
        const double r = src[3 * p], g = src[3 * p + 1], b = src[3 * p + 2];
        dst[p] = static_cast<float>((65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0);
    }
    return y;
}

double psnr(const Tensor& a, const Tensor& b, PsnrMode mode, int64_t shave) {
    check(a.shape() == b.shape(),
          "psnr: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    check(a.rank() == 3, "psnr: expected H x W x C images");
    check(shave >= 0, "psnr: negative shave");

    Tensor x = a, y = b;
    if (mode == PsnrMode::kY) {
        x = rgb_to_luma(a);
        y = rgb_to_luma(b);
    }
    const int64_t h = x.size(0), w = x.size(1), c = x.size(2);
    check(h > 2 * shave && w > 2 * shave, "psnr: shave leaves no pixels");

    double acc = 0.0;
    int64_t count = 0;
    const auto px = x.data();
    const auto py = y.data();
    for (int64_t yy = shave; yy < h - shave; ++yy)
        for (int64_t xx = shave; xx < w - shave; ++xx)
            for (int64_t ch = 0; ch < c; ++ch) {
                const double d = static_cast<double>(px[(yy * w + xx) * c + ch]) -
                                 static_cast<double>(py[(yy * w + xx) * c + ch]);
                acc += d * d;
                ++count;
            }
    const double mse = acc / static_cast<double>(count);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace clit
