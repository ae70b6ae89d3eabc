#include "advtrans/data/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "advtrans/core/errors.hpp"

namespace advtrans {

namespace {
struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open PNG for reading: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("libpng init failed reading " + path);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decode error: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    // normalize to 8-bit RGB
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    ImageU8 img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[static_cast<size_t>(y)] = img.rgb.data() + static_cast<size_t>(y) * img.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const ImageU8& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open PNG for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("libpng init failed writing " + path);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode error: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[static_cast<size_t>(y)] = const_cast<png_bytep>(img.rgb.data() + static_cast<size_t>(y) * img.width * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor decode_image(const ImageU8& img) {
    Tensor t({3, img.height, img.width});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t[(static_cast<std::int64_t>(c) * img.height + y) * img.width + x] =
                    static_cast<float>(img.at(y, x, c)) / 255.0f * 2.0f - 1.0f;
    return t;
}

ImageU8 encode_image(const Tensor& t) {
    if (t.rank() != 3 || t.dim(0) != 3) throw ContractError("encode_image: expected [3,H,W], got " + t.shape_str());
    ImageU8 img;
    img.height = t.dim(1);
    img.width = t.dim(2);
    img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const double v = t[(static_cast<std::int64_t>(c) * img.height + y) * img.width + x];
                // round half to even via the default FP rounding mode
                double q = std::nearbyint((v + 1.0) * 127.5);
                if (q < 0) q = 0;
                if (q > 255) q = 255;
                img.at(y, x, c) = static_cast<std::uint8_t>(q);
            }
    return img;
}

ImageU8 resize_u8(const ImageU8& img, int size) {
    if (img.width == size && img.height == size) return img;
    ImageU8 out;
    out.width = out.height = size;
    out.rgb.resize(static_cast<size_t>(size) * size * 3);
    const double sx = static_cast<double>(img.width) / size;
    const double sy = static_cast<double>(img.height) / size;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double fy = (y + 0.5) * sy - 0.5;
            double fx = (x + 0.5) * sx - 0.5;
            if (fy < 0) fy = 0;
            if (fx < 0) fx = 0;
            const int y0 = std::min(static_cast<int>(fy), img.height - 1);
            const int x0 = std::min(static_cast<int>(fx), img.width - 1);
            const int y1 = std::min(y0 + 1, img.height - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wy = fy - y0, wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double v = (1 - wy) * ((1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c)) +
                                 wy * ((1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c));
                out.at(y, x, c) = static_cast<std::uint8_t>(std::nearbyint(v));
            }
        }
    return out;
}

double l2_8bit(const ImageU8& a, const ImageU8& b) {
    if (a.width != b.width || a.height != b.height) throw ContractError("l2_8bit: image size mismatch");
    double acc = 0;
    for (size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = static_cast<double>(a.rgb[i]) - static_cast<double>(b.rgb[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace advtrans
