#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ego2front/common.hpp"
#include "ego2front/hash.hpp"

namespace ego2front {

// Dense row-major 4-d tensor (batch, channels, height, width). Lower-rank data
// uses size-1 leading dims.
template <typename T>
struct Tensor {
    int64_t b = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int64_t b_, int64_t c_, int64_t h_, int64_t w_)
        : b(b_), c(c_), h(h_), w(w_), data(static_cast<size_t>(b_ * c_ * h_ * w_), T(0)) {}

    static Tensor zeros_like(const Tensor& o) { return Tensor(o.b, o.c, o.h, o.w); }

    int64_t numel() const { return b * c * h * w; }
    bool same_shape(const Tensor& o) const {
        return b == o.b && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return "(" + std::to_string(b) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }

    T& at(int64_t bi, int64_t ci, int64_t y, int64_t x) {
        return data[((bi * c + ci) * h + y) * w + x];
    }
    const T& at(int64_t bi, int64_t ci, int64_t y, int64_t x) const {
        return data[((bi * c + ci) * h + y) * w + x];
    }

    T* sample(int64_t bi) { return data.data() + bi * c * h * w; }
    const T* sample(int64_t bi) const { return data.data() + bi * c * h * w; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    void add_(const Tensor& o) {
        require(same_shape(o), ErrorCode::ShapeMismatch,
                "tensor add: " + shape_str() + " vs " + o.shape_str());
        for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    }

    void scale_(T s) {
        for (auto& v : data) v *= s;
    }

    bool all_finite() const {
        for (const auto& v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    uint64_t content_hash() const {
        uint64_t h0 = hash_span(&b, 1);
        h0 = hash_span(&c, 1, h0);
        h0 = hash_span(&h, 1, h0);
        h0 = hash_span(&w, 1, h0);
        return hash_span(data.data(), data.size(), h0);
    }
};

// concat along the channel dimension
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.b == b.b && a.h == b.h && a.w == b.w, ErrorCode::ShapeMismatch,
            "concat_channels: " + a.shape_str() + " vs " + b.shape_str());
    Tensor<T> out(a.b, a.c + b.c, a.h, a.w);
    const int64_t plane = a.h * a.w;
    for (int64_t bi = 0; bi < a.b; ++bi) {
        std::copy(a.sample(bi), a.sample(bi) + a.c * plane, out.sample(bi));
        std::copy(b.sample(bi), b.sample(bi) + b.c * plane, out.sample(bi) + a.c * plane);
    }
    return out;
}

// split channels [0, c_first) / [c_first, c) into two tensors
template <typename T>
void split_channels(const Tensor<T>& in, int64_t c_first, Tensor<T>& a, Tensor<T>& b) {
    require(c_first > 0 && c_first < in.c, ErrorCode::ShapeMismatch, "split_channels: bad split");
    a = Tensor<T>(in.b, c_first, in.h, in.w);
    b = Tensor<T>(in.b, in.c - c_first, in.h, in.w);
    const int64_t plane = in.h * in.w;
    for (int64_t bi = 0; bi < in.b; ++bi) {
        std::copy(in.sample(bi), in.sample(bi) + c_first * plane, a.sample(bi));
        std::copy(in.sample(bi) + c_first * plane, in.sample(bi) + in.c * plane, b.sample(bi));
    }
}

}  // namespace ego2front
