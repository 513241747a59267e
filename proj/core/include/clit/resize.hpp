#pragma once

#include "clit/tensor.hpp"

namespace clit {

// Separable bicubic resize with the Catmull-Rom-family kernel (a = -0.5),
// anti-aliased when minifying: the kernel is stretched by the inverse scale
// and renormalized, and border taps clamp (replicate). Output pixel j of an
// axis scaled by s samples the source at (j + 0.5)/s - 0.5. This is the
// conventional DIV2K degradation; it is used for training-pair synthesis and
// as the evaluation baseline upsampler.
Tensor resize_bicubic(const Tensor& image, int64_t out_h, int64_t out_w);

// Factor form; output dims are ceil(r * n).
Tensor bicubic_upsample(const Tensor& image, double rh, double rw);

}  // namespace clit
