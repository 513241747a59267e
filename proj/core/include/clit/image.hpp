#pragma once

#include <cstdint>
#include <string>

#include "clit/tensor.hpp"

namespace clit {

// 8-bit RGB PNG I/O. Images are H x W x 3 float tensors in [0, 1]; grayscale,
// palette and alpha inputs are expanded/stripped to RGB on load.
Tensor load_png(const std::string& path);
void save_png(const std::string& path, const Tensor& image);

// Round half away from zero after scaling to [0, 255], clamped.
uint8_t quantize_u8(float v);

}  // namespace clit
