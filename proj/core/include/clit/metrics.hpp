#pragma once

#include "clit/tensor.hpp"

namespace clit {

enum class PsnrMode { kRgb, kY };

// ITU-R BT.601 luma of an RGB image in [0,1], kept in [0,1].
Tensor rgb_to_luma(const Tensor& rgb);

// Peak signal-to-noise ratio in dB with peak 1. `shave` pixels are cropped
// from every border first; kY converts both images to luma. Identical images
// return +infinity (the documented cap sentinel).
double psnr(const Tensor& a, const Tensor& b, PsnrMode mode = PsnrMode::kRgb, int64_t shave = 0);

}  // namespace clit
