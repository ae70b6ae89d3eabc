#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advtrans/core/tensor.hpp"

namespace advtrans {

/// Row-major 8-bit RGB image.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // 3 bytes per pixel

    std::uint8_t& at(int y, int x, int c) { return rgb[static_cast<size_t>((y * width + x) * 3 + c)]; }
    std::uint8_t at(int y, int x, int c) const { return rgb[static_cast<size_t>((y * width + x) * 3 + c)]; }
};

ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

/// [0,255] byte image -> [3,H,W] tensor in [-1,1].
Tensor decode_image(const ImageU8& img);

/// [3,H,W] tensor in [-1,1] -> byte image, round-half-to-even quantization.
ImageU8 encode_image(const Tensor& t);

/// Bilinear resample of a byte image (used at ingestion only; the
/// differentiable resize lives in the op library).
ImageU8 resize_u8(const ImageU8& img, int size);

/// L2 distance between two images after 8-bit quantization, flattened over
/// all pixels and channels (the perturbation-accounting convention).
double l2_8bit(const ImageU8& a, const ImageU8& b);

}  // namespace advtrans
