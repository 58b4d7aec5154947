#pragma once

// Video U-Net generator and temporal patch discriminator.
//
// The generator consumes a window of N egocentric frames stacked with N pose
// conditioning frames along the channel axis (6N x R x R) and emits the N
// frontal frames (3N x R x R) through a tanh head. Seven stride-2 levels at
// 256 input; 128/64 inputs truncate the deepest levels so the innermost
// feature map stays 2x2.
//
// The discriminator is a patch classifier over the full window: it sees the
// generator input stack plus a real-or-fake candidate stack (9N channels) and
// outputs a spatial logit map. No normalization layers, so a patch's logit
// depends only on pixels inside its receptive field.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ego2front/layers.hpp"

namespace ego2front::nn {

inline const std::vector<int64_t>& full_level_channels() {
    static const std::vector<int64_t> ch = {64, 128, 256, 512, 512, 512, 512};
    return ch;
}

struct GeneratorConfig {
    int64_t n_frames = 11;
    int64_t resolution = 256;
    std::vector<int64_t> level_channels = full_level_channels();
    int64_t kernel = 4;
    int64_t stride = 2;

    int64_t in_channels() const { return 6 * n_frames; }
    int64_t out_channels() const { return 3 * n_frames; }
    int64_t levels() const { return static_cast<int64_t>(level_channels.size()); }
    int64_t level_resolution(int64_t i) const { return resolution >> (i + 1); }

    static GeneratorConfig make(int64_t n_frames, int64_t resolution) {
        GeneratorConfig cfg;
        cfg.n_frames = n_frames;
        cfg.resolution = resolution;
        int64_t levels = 0;
        while ((resolution >> (levels + 1)) > 2) ++levels;
        ++levels;  // innermost level maps to 2x2
        const auto& full = full_level_channels();
        cfg.level_channels.assign(full.begin(),
                                  full.begin() + std::min<size_t>(full.size(),
                                                                  static_cast<size_t>(levels)));
        cfg.validate();
        return cfg;
    }

    void validate() const {
        require(n_frames >= 1, ErrorCode::ConfigMismatch, "generator: n_frames >= 1");
        require(!level_channels.empty(), ErrorCode::ConfigMismatch, "generator: no levels");
        require(resolution == (int64_t(2) << levels()), ErrorCode::ConfigMismatch,
                "generator: resolution " + std::to_string(resolution) +
                    " incompatible with " + std::to_string(levels()) + " levels");
        require(in_channels() == 2 * out_channels(), ErrorCode::ConfigMismatch,
                "generator: in_channels must be 2x out_channels");
    }
};

struct DiscriminatorConfig {
    int64_t n_frames = 11;
    int64_t resolution = 256;
    int64_t base_channels = 64;
    int64_t depth = 4;  // stride-2 down blocks before the 1-channel head
    int64_t max_channels = 512;

    int64_t in_channels() const { return 9 * n_frames; }
    int64_t patch_map_size() const { return resolution >> depth; }

    void validate() const {
        require(depth >= 1, ErrorCode::ConfigMismatch, "discriminator: depth >= 1");
        require((resolution >> depth) >= 1, ErrorCode::ConfigMismatch,
                "discriminator: depth too large for resolution");
    }
};

template <typename T>
class Generator {
  public:
    explicit Generator(const GeneratorConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        const int64_t L = cfg_.levels();
        for (int64_t i = 0; i < L; ++i) {
            int64_t in_c = (i == 0) ? cfg_.in_channels() : cfg_.level_channels[i - 1];
            enc_.emplace_back(std::make_unique<Conv2d<T>>(
                "G.enc" + std::to_string(i), in_c, cfg_.level_channels[i], cfg_.kernel,
                cfg_.stride, 1));
            if (i > 0)
                enc_norm_.emplace_back(std::make_unique<InstanceNorm2d<T>>(
                    "G.enc" + std::to_string(i) + ".norm", cfg_.level_channels[i]));
        }
        for (int64_t t = 0; t + 1 < L; ++t) {
            int64_t in_c = (t == 0) ? cfg_.level_channels[L - 1]
                                    : 2 * cfg_.level_channels[L - 1 - t];
            int64_t out_c = cfg_.level_channels[L - 2 - t];
            dec_.emplace_back(std::make_unique<ConvTranspose2d<T>>(
                "G.dec" + std::to_string(t), in_c, out_c, cfg_.kernel, cfg_.stride, 1));
            dec_norm_.emplace_back(std::make_unique<InstanceNorm2d<T>>(
                "G.dec" + std::to_string(t) + ".norm", out_c));
        }
        int64_t final_in = (L >= 2) ? 2 * cfg_.level_channels[0] : cfg_.level_channels[0];
        final_ = std::make_unique<ConvTranspose2d<T>>("G.out", final_in,
                                                      cfg_.out_channels(), cfg_.kernel,
                                                      cfg_.stride, 1);
        enc_act_.assign(static_cast<size_t>(L), LeakyReLU<T>(0.2));
        dec_act_.assign(static_cast<size_t>(L - 1), LeakyReLU<T>(0.0));
    }

    void init(Rng& rng) {
        for (auto& c : enc_) c->init(rng);
        for (auto& n : enc_norm_) n->init(rng);
        for (auto& d : dec_) d->init(rng);
        for (auto& n : dec_norm_) n->init(rng);
        final_->init(rng);
    }

    const GeneratorConfig& config() const { return cfg_; }

    Tensor<T> forward(const Tensor<T>& x) {
        require(x.c == cfg_.in_channels() && x.h == cfg_.resolution && x.w == cfg_.resolution,
                ErrorCode::ShapeMismatch,
                "generator input " + x.shape_str() + ", want (*," +
                    std::to_string(cfg_.in_channels()) + "," +
                    std::to_string(cfg_.resolution) + "," + std::to_string(cfg_.resolution) + ")");
        const int64_t L = cfg_.levels();
        skips_.clear();
        Tensor<T> h = x;
        for (int64_t i = 0; i < L; ++i) {
            h = enc_[static_cast<size_t>(i)]->forward(h);
            if (i > 0) h = enc_norm_[static_cast<size_t>(i - 1)]->forward(h);
            h = enc_act_[static_cast<size_t>(i)].forward(h);
            skips_.push_back(h);
        }
        for (int64_t t = 0; t + 1 < L; ++t) {
            h = dec_[static_cast<size_t>(t)]->forward(h);
            h = dec_norm_[static_cast<size_t>(t)]->forward(h);
            h = dec_act_[static_cast<size_t>(t)].forward(h);
            h = concat_channels(h, skips_[static_cast<size_t>(L - 2 - t)]);
        }
        h = final_->forward(h);
        return out_act_.forward(h);
    }

    // Returns the gradient w.r.t. the input stack; accumulates parameter grads.
    Tensor<T> backward(const Tensor<T>& g_out) {
        const int64_t L = cfg_.levels();
        Tensor<T> g = out_act_.backward(g_out);
        g = final_->backward(g);
        // skip-connection gradients accumulate while unwinding the decoder
        std::vector<Tensor<T>> skip_grads(static_cast<size_t>(L));
        for (int64_t t = L - 2; t >= 0; --t) {
            Tensor<T> g_dec, g_skip;
            split_channels(g, dec_[static_cast<size_t>(t)]->params()[0]->value.c, g_dec, g_skip);
            skip_grads[static_cast<size_t>(L - 2 - t)] = std::move(g_skip);
            g_dec = dec_act_[static_cast<size_t>(t)].backward(g_dec);
            g_dec = dec_norm_[static_cast<size_t>(t)]->backward(g_dec);
            g = dec_[static_cast<size_t>(t)]->backward(g_dec);
        }
        // innermost skip feeds the first decoder step directly
        for (int64_t i = L - 1; i >= 0; --i) {
            if (i < L - 1 && skip_grads[static_cast<size_t>(i)].numel() > 0)
                g.add_(skip_grads[static_cast<size_t>(i)]);
            g = enc_act_[static_cast<size_t>(i)].backward(g);
            if (i > 0) g = enc_norm_[static_cast<size_t>(i - 1)]->backward(g);
            g = enc_[static_cast<size_t>(i)]->backward(g);
        }
        return g;
    }

    std::vector<Parameter<T>*> params() {
        std::vector<Parameter<T>*> out;
        for (auto& c : enc_)
            for (auto* p : c->params()) out.push_back(p);
        for (auto& n : enc_norm_)
            for (auto* p : n->params()) out.push_back(p);
        for (auto& d : dec_)
            for (auto* p : d->params()) out.push_back(p);
        for (auto& n : dec_norm_)
            for (auto* p : n->params()) out.push_back(p);
        for (auto* p : final_->params()) out.push_back(p);
        return out;
    }

    int64_t param_count() {
        int64_t n = 0;
        for (auto* p : params()) n += p->value.numel();
        return n;
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

  private:
    GeneratorConfig cfg_;
    std::vector<std::unique_ptr<Conv2d<T>>> enc_;
    std::vector<std::unique_ptr<InstanceNorm2d<T>>> enc_norm_;
    std::vector<LeakyReLU<T>> enc_act_;
    std::vector<std::unique_ptr<ConvTranspose2d<T>>> dec_;
    std::vector<std::unique_ptr<InstanceNorm2d<T>>> dec_norm_;
    std::vector<LeakyReLU<T>> dec_act_;
    std::unique_ptr<ConvTranspose2d<T>> final_;
    Tanh<T> out_act_;
    std::vector<Tensor<T>> skips_;
};

template <typename T>
class Discriminator {
  public:
    explicit Discriminator(const DiscriminatorConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        int64_t in_c = cfg_.in_channels();
        for (int64_t i = 0; i < cfg_.depth; ++i) {
            int64_t out_c = std::min(cfg_.base_channels << i, cfg_.max_channels);
            blocks_.emplace_back(std::make_unique<Conv2d<T>>(
                "D.block" + std::to_string(i), in_c, out_c, 4, 2, 1));
            in_c = out_c;
        }
        head_ = std::make_unique<Conv2d<T>>("D.head", in_c, 1, 3, 1, 1);
        acts_.assign(static_cast<size_t>(cfg_.depth), LeakyReLU<T>(0.2));
    }

    void init(Rng& rng) {
        for (auto& b : blocks_) b->init(rng);
        head_->init(rng);
    }

    const DiscriminatorConfig& config() const { return cfg_; }

    // Input: conditioning stack (6N) concatenated with candidate frames (3N).
    Tensor<T> forward(const Tensor<T>& x) {
        require(x.c == cfg_.in_channels(), ErrorCode::ShapeMismatch,
                "discriminator input channels " + std::to_string(x.c) + ", want " +
                    std::to_string(cfg_.in_channels()));
        Tensor<T> h = x;
        for (size_t i = 0; i < blocks_.size(); ++i) {
            h = blocks_[i]->forward(h);
            h = acts_[i].forward(h);
        }
        return head_->forward(h);  // raw logits; losses apply the sigmoid
    }

    Tensor<T> backward(const Tensor<T>& g_logits) {
        Tensor<T> g = head_->backward(g_logits);
        for (size_t i = blocks_.size(); i-- > 0;) {
            g = acts_[i].backward(g);
            g = blocks_[i]->backward(g);
        }
        return g;
    }

    std::vector<Parameter<T>*> params() {
        std::vector<Parameter<T>*> out;
        for (auto& b : blocks_)
            for (auto* p : b->params()) out.push_back(p);
        for (auto* p : head_->params()) out.push_back(p);
        return out;
    }

    int64_t param_count() {
        int64_t n = 0;
        for (auto* p : params()) n += p->value.numel();
        return n;
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

  private:
    DiscriminatorConfig cfg_;
    std::vector<std::unique_ptr<Conv2d<T>>> blocks_;
    std::vector<LeakyReLU<T>> acts_;
    std::unique_ptr<Conv2d<T>> head_;
};

}  // namespace ego2front::nn
