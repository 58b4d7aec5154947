#pragma once

// 8-bit image container with PNG I/O (libpng), bilinear resize and the
// center-pad crop used by the data preparation step.

#include <cstdint>
#include <string>
#include <vector>

#include "ego2front/common.hpp"
#include "ego2front/tensor.hpp"

namespace ego2front {

struct Image {
    int w = 0, h = 0, channels = 0;  // channels: 1 (gray) or 3 (rgb)
    std::vector<uint8_t> data;

    Image() = default;
    Image(int w_, int h_, int c_) : w(w_), h(h_), channels(c_),
                                    data(static_cast<size_t>(w_) * h_ * c_, 0) {}

    uint8_t& at(int y, int x, int c = 0) {
        return data[(static_cast<size_t>(y) * w + x) * channels + c];
    }
    uint8_t at(int y, int x, int c = 0) const {
        return data[(static_cast<size_t>(y) * w + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return w == o.w && h == o.h && channels == o.channels;
    }

    double mean() const {
        if (data.empty()) return 0.0;
        double acc = 0;
        for (uint8_t v : data) acc += v;
        return acc / static_cast<double>(data.size());
    }

    uint64_t content_hash() const;
};

struct CropBox {
    int x = 0, y = 0, w = 0, h = 0;
};

Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img);

// aspect-preserving square output: center-pad with black to a square, then
// bilinear-resize to out_res x out_res
Image crop_resize(const Image& frame, const CropBox& crop, int out_res);

Image resize_bilinear(const Image& src, int out_w, int out_h);

Image rgb_to_luminance(const Image& rgb);

// [0,255] u8 -> [-1,1] float frame stack entry; dst points at 3*h*w floats
void image_to_norm(const Image& img, float* dst);
// [-1,1] float -> clamped u8 image
Image norm_to_image(const float* src, int h, int w);

}  // namespace ego2front
