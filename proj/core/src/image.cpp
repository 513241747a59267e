#include "clit/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace clit {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

uint8_t quantize_u8(float v) {
    const float scaled = v * 255.0f;
    if (!(scaled > 0.0f)) return 0;  // also catches NaN
    if (scaled >= 255.0f) return 255;
    return static_cast<uint8_t>(std::lround(scaled));  // lround: half away from zero
}

Tensor load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    check(fp != nullptr, "load_png: cannot open " + path);

    png_byte header[8];
    check(std::fread(header, 1, 8, fp.get()) == 8 && png_sig_cmp(header, 0, 8) == 0,
          "load_png: " + path + " is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    check(png != nullptr, "load_png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail("load_png: out of memory");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("load_png: failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // Normalize to 8-bit RGB regardless of the source layout.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const png_uint_32 channels = png_get_channels(png, info);
    if (channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("load_png: " + path + " did not normalize to RGB");
    }

    pixels.resize(static_cast<size_t>(w) * h * 3);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = pixels.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Tensor img({static_cast<int64_t>(h), static_cast<int64_t>(w), 3});
    auto dst = img.data();
    for (size_t i = 0; i < pixels.size(); ++i) dst[i] = static_cast<float>(pixels[i]) / 255.0f;
    return img;
}

void save_png(const std::string& path, const Tensor& image) {
    check(image.rank() == 3 && image.size(2) == 3,
          "save_png: expected an H x W x 3 image, got " + shape_str(image.shape()));
    const int64_t h = image.size(0), w = image.size(1);

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    check(fp != nullptr, "save_png: cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    check(png != nullptr, "save_png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("save_png: out of memory");
    }
    std::vector<png_byte> pixels(static_cast<size_t>(h) * w * 3);
    std::vector<png_bytep> row_ptrs(static_cast<size_t>(h));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("save_png: failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);

    auto src = image.data();
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = quantize_u8(src[i]);
    for (int64_t y = 0; y < h; ++y) row_ptrs[static_cast<size_t>(y)] = pixels.data() + y * w * 3;

    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace clit
