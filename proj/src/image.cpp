#include "ego2front/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ego2front/hash.hpp"

namespace ego2front {

uint64_t Image::content_hash() const {
    uint64_t h0 = hash_span(&w, 1);
    h0 = hash_span(&h, 1, h0);
    h0 = hash_span(&channels, 1, h0);
    return hash_span(data.data(), data.size(), h0);
}

namespace {

struct FileCloser {
    FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

}  // namespace

Image load_png(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    require(f != nullptr, ErrorCode::IoError, "cannot open " + path);
    FileCloser closer{f};

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::IoError, "png read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        raise(ErrorCode::IoError, "png info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::IoError, "png decode failed: " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    require(channels == 1 || channels == 3, ErrorCode::IoError,
            "unsupported channel count in " + path);

    Image img(static_cast<int>(w), static_cast<int>(h), channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.data.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const std::string& path, const Image& img) {
    require(img.channels == 1 || img.channels == 3, ErrorCode::IoError,
            "save_png: unsupported channels");
    FILE* f = std::fopen(path.c_str(), "wb");
    require(f != nullptr, ErrorCode::IoError, "cannot write " + path);
    FileCloser closer{f};

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::IoError, "png write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        raise(ErrorCode::IoError, "png info struct");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::IoError, "png encode failed: " + path);
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, img.w, img.h, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.h);
    for (int y = 0; y < img.h; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() +
                                        static_cast<size_t>(y) * img.w * img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image resize_bilinear(const Image& src, int out_w, int out_h) {
    Image dst(out_w, out_h, src.channels);
    const double sx = static_cast<double>(src.w) / out_w;
    const double sy = static_cast<double>(src.h) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y1 = std::min(y0 + 1, src.h - 1);
        y0 = std::clamp(y0, 0, src.h - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x1 = std::min(x0 + 1, src.w - 1);
            x0 = std::clamp(x0, 0, src.w - 1);
            for (int c = 0; c < src.channels; ++c) {
                double v = (1 - wy) * ((1 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c)) +
                           wy * ((1 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c));
                dst.at(y, x, c) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return dst;
}

Image crop_resize(const Image& frame, const CropBox& crop, int out_res) {
    require(crop.w > 0 && crop.h > 0 && crop.x >= 0 && crop.y >= 0 &&
                crop.x + crop.w <= frame.w && crop.y + crop.h <= frame.h,
            ErrorCode::CropOutOfBounds, "crop_resize: crop outside frame");
    const int side = std::max(crop.w, crop.h);
    Image square(side, side, frame.channels);
    const int off_x = (side - crop.w) / 2;
    const int off_y = (side - crop.h) / 2;
    for (int y = 0; y < crop.h; ++y)
        for (int x = 0; x < crop.w; ++x)
            for (int c = 0; c < frame.channels; ++c)
                square.at(y + off_y, x + off_x, c) = frame.at(crop.y + y, crop.x + x, c);
    if (side == out_res) return square;
    return resize_bilinear(square, out_res, out_res);
}

Image rgb_to_luminance(const Image& rgb) {
    if (rgb.channels == 1) return rgb;
    Image out(rgb.w, rgb.h, 1);
    for (int y = 0; y < rgb.h; ++y)
        for (int x = 0; x < rgb.w; ++x) {
            double v = 0.299 * rgb.at(y, x, 0) + 0.587 * rgb.at(y, x, 1) +
                       0.114 * rgb.at(y, x, 2);
            out.at(y, x) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
        }
    return out;
}

void image_to_norm(const Image& img, float* dst) {
    require(img.channels == 3, ErrorCode::ShapeMismatch, "image_to_norm: RGB expected");
    const size_t plane = static_cast<size_t>(img.w) * img.h;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                dst[c * plane + static_cast<size_t>(y) * img.w + x] =
                    static_cast<float>(img.at(y, x, c)) / 127.5f - 1.0f;
}

Image norm_to_image(const float* src, int h, int w) {
    Image img(w, h, 3);
    const size_t plane = static_cast<size_t>(w) * h;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float v = (src[c * plane + static_cast<size_t>(y) * w + x] + 1.0f) * 127.5f;
                img.at(y, x, c) =
                    static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
            }
    return img;
}

}  // namespace ego2front
