#pragma once

// Trainable layer primitives. Each layer owns its parameters and the
// activations saved by the most recent forward pass; forward/backward pairs
// are therefore not reentrant within one optimization step.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ego2front/kernels.hpp"
#include "ego2front/rng.hpp"
#include "ego2front/tensor.hpp"

namespace ego2front::nn {

template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    // Adam state, lazily sized by the optimizer
    Tensor<T> adam_m;
    Tensor<T> adam_v;

    Parameter() = default;
    Parameter(std::string n, int64_t b, int64_t c, int64_t h, int64_t w)
        : name(std::move(n)), value(b, c, h, w), grad(b, c, h, w) {}

    void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
void init_gaussian(Tensor<T>& t, Rng& rng, double stddev, double mean = 0.0) {
    for (auto& v : t.data) v = static_cast<T>(mean + stddev * rng.gaussian());
}

template <typename T>
class Conv2d {
  public:
    Conv2d(std::string name, int64_t in_c, int64_t out_c, int64_t k, int64_t stride,
           int64_t pad, bool train_params = true)
        : weight_(name + ".weight", out_c, in_c, k, k),
          bias_(name + ".bias", out_c, 1, 1, 1),
          in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
          train_params_(train_params) {}

    void init(Rng& rng, double stddev = 0.02) {
        init_gaussian(weight_.value, rng, stddev);
        bias_.value.fill(T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        require(x.c == in_c_, ErrorCode::ShapeMismatch,
                "conv '" + weight_.name + "': input channels " + std::to_string(x.c) +
                    " != " + std::to_string(in_c_));
        ConvSpec s = spec(x);
        saved_input_ = x;
        Tensor<T> y(x.b, out_c_, s.out_h(), s.out_w());
        for (int64_t b = 0; b < x.b; ++b) {
            if (backend() == Backend::fast) {
                kernels::fast::conv2d_forward(x.sample(b), weight_.value.data.data(),
                                              bias_.value.data.data(), s, y.sample(b), cols_);
            } else {
                kernels::ref::conv2d_forward(x.sample(b), weight_.value.data.data(),
                                             bias_.value.data.data(), s, y.sample(b));
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const Tensor<T>& x = saved_input_;
        ConvSpec s = spec(x);
        Tensor<T> gx(x.b, x.c, x.h, x.w);
        for (int64_t b = 0; b < x.b; ++b) {
            if (backend() == Backend::fast) {
                kernels::fast::conv2d_backward_input(gy.sample(b), weight_.value.data.data(),
                                                     s, gx.sample(b), cols_);
                if (train_params_)
                    kernels::fast::conv2d_backward_weight(x.sample(b), gy.sample(b), s,
                                                          weight_.grad.data.data(),
                                                          bias_.grad.data.data(), cols_);
            } else {
                kernels::ref::conv2d_backward_input(gy.sample(b), weight_.value.data.data(),
                                                    s, gx.sample(b));
                if (train_params_)
                    kernels::ref::conv2d_backward_weight(x.sample(b), gy.sample(b), s,
                                                         weight_.grad.data.data(),
                                                         bias_.grad.data.data());
            }
        }
        return gx;
    }

    std::vector<Parameter<T>*> params() { return {&weight_, &bias_}; }
    int64_t out_channels() const { return out_c_; }

  private:
    ConvSpec spec(const Tensor<T>& x) const {
        return ConvSpec{x.c, x.h, x.w, out_c_, k_, stride_, pad_};
    }

    Parameter<T> weight_;  // (out_c, in_c, k, k)
    Parameter<T> bias_;
    int64_t in_c_, out_c_, k_, stride_, pad_;
    bool train_params_;
    Tensor<T> saved_input_;
    std::vector<T> cols_;
};

template <typename T>
class ConvTranspose2d {
  public:
    ConvTranspose2d(std::string name, int64_t in_c, int64_t out_c, int64_t k,
                    int64_t stride, int64_t pad)
        : weight_(name + ".weight", in_c, out_c, k, k),
          bias_(name + ".bias", out_c, 1, 1, 1),
          in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad) {}

    void init(Rng& rng, double stddev = 0.02) {
        init_gaussian(weight_.value, rng, stddev);
        bias_.value.fill(T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        require(x.c == in_c_, ErrorCode::ShapeMismatch,
                "convT '" + weight_.name + "': input channels " + std::to_string(x.c) +
                    " != " + std::to_string(in_c_));
        ConvTransposeSpec s = spec(x);
        saved_input_ = x;
        Tensor<T> y(x.b, out_c_, s.out_h(), s.out_w());
        for (int64_t b = 0; b < x.b; ++b) {
            if (backend() == Backend::fast) {
                kernels::fast::conv_transpose2d_forward(x.sample(b), weight_.value.data.data(),
                                                        bias_.value.data.data(), s,
                                                        y.sample(b), cols_);
            } else {
                kernels::ref::conv_transpose2d_forward(x.sample(b), weight_.value.data.data(),
                                                       bias_.value.data.data(), s, y.sample(b));
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const Tensor<T>& x = saved_input_;
        ConvTransposeSpec s = spec(x);
        Tensor<T> gx(x.b, x.c, x.h, x.w);
        for (int64_t b = 0; b < x.b; ++b) {
            if (backend() == Backend::fast) {
                kernels::fast::conv_transpose2d_backward_input(
                    gy.sample(b), weight_.value.data.data(), s, gx.sample(b), cols_);
                kernels::fast::conv_transpose2d_backward_weight(
                    x.sample(b), gy.sample(b), s, weight_.grad.data.data(),
                    bias_.grad.data.data(), cols_);
            } else {
                kernels::ref::conv_transpose2d_backward_input(
                    gy.sample(b), weight_.value.data.data(), s, gx.sample(b));
                kernels::ref::conv_transpose2d_backward_weight(
                    x.sample(b), gy.sample(b), s, weight_.grad.data.data(),
                    bias_.grad.data.data());
            }
        }
        return gx;
    }

    std::vector<Parameter<T>*> params() { return {&weight_, &bias_}; }

  private:
    ConvTransposeSpec spec(const Tensor<T>& x) const {
        return ConvTransposeSpec{x.c, x.h, x.w, out_c_, k_, stride_, pad_};
    }

    Parameter<T> weight_;  // (in_c, out_c, k, k)
    Parameter<T> bias_;
    int64_t in_c_, out_c_, k_, stride_, pad_;
    Tensor<T> saved_input_;
    std::vector<T> cols_;
};

// Per-sample, per-channel normalization over the spatial extent.
template <typename T>
class InstanceNorm2d {
  public:
    InstanceNorm2d(std::string name, int64_t channels, double eps = 1e-5)
        : gamma_(name + ".gamma", channels, 1, 1, 1),
          beta_(name + ".beta", channels, 1, 1, 1),
          channels_(channels), eps_(eps) {
        gamma_.value.fill(T(1));
    }

    void init(Rng& rng, double stddev = 0.02) {
        init_gaussian(gamma_.value, rng, stddev, 1.0);
        beta_.value.fill(T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        require(x.c == channels_, ErrorCode::ShapeMismatch, "instance norm channels");
        const int64_t plane = x.h * x.w;
        xhat_ = Tensor<T>(x.b, x.c, x.h, x.w);
        invstd_.assign(static_cast<size_t>(x.b * x.c), T(0));
        Tensor<T> y(x.b, x.c, x.h, x.w);
#pragma omp parallel for schedule(static) collapse(2)
        for (int64_t b = 0; b < x.b; ++b) {
            for (int64_t c = 0; c < x.c; ++c) {
                const T* px = &x.at(b, c, 0, 0);
                T* ph = &xhat_.at(b, c, 0, 0);
                T* py = &y.at(b, c, 0, 0);
                T mean = T(0);
                for (int64_t i = 0; i < plane; ++i) mean += px[i];
                mean /= static_cast<T>(plane);
                T var = T(0);
                for (int64_t i = 0; i < plane; ++i) {
                    T d = px[i] - mean;
                    var += d * d;
                }
                var /= static_cast<T>(plane);
                T inv = T(1) / std::sqrt(var + static_cast<T>(eps_));
                invstd_[static_cast<size_t>(b * x.c + c)] = inv;
                const T g = gamma_.value.data[static_cast<size_t>(c)];
                const T be = beta_.value.data[static_cast<size_t>(c)];
                for (int64_t i = 0; i < plane; ++i) {
                    ph[i] = (px[i] - mean) * inv;
                    py[i] = g * ph[i] + be;
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const int64_t plane = gy.h * gy.w;
        Tensor<T> gx(gy.b, gy.c, gy.h, gy.w);
        std::vector<T> ggamma(static_cast<size_t>(channels_), T(0));
        std::vector<T> gbeta(static_cast<size_t>(channels_), T(0));
        for (int64_t b = 0; b < gy.b; ++b) {
#pragma omp parallel for schedule(static)
            for (int64_t c = 0; c < gy.c; ++c) {
                const T* pg = &gy.at(b, c, 0, 0);
                const T* ph = &xhat_.at(b, c, 0, 0);
                T* px = &gx.at(b, c, 0, 0);
                const T g = gamma_.value.data[static_cast<size_t>(c)];
                const T inv = invstd_[static_cast<size_t>(b * gy.c + c)];
                T sum_g = T(0), sum_gh = T(0);
                for (int64_t i = 0; i < plane; ++i) {
                    sum_g += pg[i];
                    sum_gh += pg[i] * ph[i];
                }
                ggamma[static_cast<size_t>(c)] += sum_gh;
                gbeta[static_cast<size_t>(c)] += sum_g;
                const T n = static_cast<T>(plane);
                for (int64_t i = 0; i < plane; ++i) {
                    px[i] = g * inv * (pg[i] - sum_g / n - ph[i] * sum_gh / n);
                }
            }
        }
        for (int64_t c = 0; c < channels_; ++c) {
            gamma_.grad.data[static_cast<size_t>(c)] += ggamma[static_cast<size_t>(c)];
            beta_.grad.data[static_cast<size_t>(c)] += gbeta[static_cast<size_t>(c)];
        }
        return gx;
    }

    std::vector<Parameter<T>*> params() { return {&gamma_, &beta_}; }

  private:
    Parameter<T> gamma_;
    Parameter<T> beta_;
    int64_t channels_;
    double eps_;
    Tensor<T> xhat_;
    std::vector<T> invstd_;
};

template <typename T>
class LeakyReLU {
  public:
    explicit LeakyReLU(double slope) : slope_(static_cast<T>(slope)) {}

    Tensor<T> forward(const Tensor<T>& x) {
        saved_input_ = x;
        Tensor<T> y = x;
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < y.numel(); ++i) {
            T& v = y.data[static_cast<size_t>(i)];
            if (v < T(0)) v *= slope_;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx = gy;
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < gx.numel(); ++i) {
            if (saved_input_.data[static_cast<size_t>(i)] < T(0))
                gx.data[static_cast<size_t>(i)] *= slope_;
        }
        return gx;
    }

  private:
    T slope_;
    Tensor<T> saved_input_;
};

template <typename T>
class Tanh {
  public:
    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> y = x;
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < y.numel(); ++i)
            y.data[static_cast<size_t>(i)] = std::tanh(y.data[static_cast<size_t>(i)]);
        saved_output_ = y;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx = gy;
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < gx.numel(); ++i) {
            T y = saved_output_.data[static_cast<size_t>(i)];
            gx.data[static_cast<size_t>(i)] *= (T(1) - y * y);
        }
        return gx;
    }

  private:
    Tensor<T> saved_output_;
};

}  // namespace ego2front::nn
