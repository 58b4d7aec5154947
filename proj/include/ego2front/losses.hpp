#pragma once

// Training objective: non-saturating adversarial loss, l1 content loss and a
// layer-tapped perceptual loss, combined as adv + lambda1*content +
// lambda2*perceptual with (10.0, 0.0025) defaults.
//
// Adversarial terms are evaluated from raw logits through stable softplus
// forms; probabilities are never materialized.

#include <cmath>
#include <string>
#include <vector>

#include "ego2front/hash.hpp"
#include "ego2front/layers.hpp"

namespace ego2front::nn {

struct LossWeights {
    double lambda1 = 10.0;
    double lambda2 = 0.0025;
};

template <typename T>
T stable_softplus(T x) {
    T m = x > T(0) ? x : T(0);
    return m + std::log1p(std::exp(-std::abs(x)));
}

template <typename T>
T sigmoid(T x) {
    if (x >= T(0)) {
        T e = std::exp(-x);
        return T(1) / (T(1) + e);
    }
    T e = std::exp(x);
    return e / (T(1) + e);
}

// ---------------------------------------------------------------------------
// content loss: mean absolute difference
// ---------------------------------------------------------------------------

template <typename T>
T content_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    require(pred.same_shape(target), ErrorCode::ShapeMismatch,
            "content_loss: " + pred.shape_str() + " vs " + target.shape_str());
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i)
        acc += std::abs(static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]));
    return static_cast<T>(acc / static_cast<double>(pred.numel()));
}

template <typename T>
Tensor<T> content_loss_backward(const Tensor<T>& pred, const Tensor<T>& target, T scale) {
    Tensor<T> g = Tensor<T>::zeros_like(pred);
    const T unit = scale / static_cast<T>(pred.numel());
    for (size_t i = 0; i < pred.data.size(); ++i) {
        T d = pred.data[i] - target.data[i];
        g.data[i] = d > T(0) ? unit : (d < T(0) ? -unit : T(0));
    }
    return g;
}

// ---------------------------------------------------------------------------
// adversarial losses (non-saturating game), computed from logits
//   loss_D = -mean log s(real) - mean log(1 - s(fake))
//   loss_G = -mean log s(fake)
// ---------------------------------------------------------------------------

template <typename T>
struct AdversarialLosses {
    T loss_d;
    T loss_g;
};

template <typename T>
AdversarialLosses<T> adversarial_losses(const Tensor<T>& d_real_logits,
                                        const Tensor<T>& d_fake_logits) {
    require(d_real_logits.all_finite() && d_fake_logits.all_finite(),
            ErrorCode::NonFiniteInput, "adversarial_losses: non-finite logits");
    double ld = 0.0;
    for (const T& v : d_real_logits.data) ld += stable_softplus(-static_cast<double>(v));
    ld /= static_cast<double>(d_real_logits.numel());
    double lf = 0.0;
    for (const T& v : d_fake_logits.data) lf += stable_softplus(static_cast<double>(v));
    lf /= static_cast<double>(d_fake_logits.numel());
    double lg = 0.0;
    for (const T& v : d_fake_logits.data) lg += stable_softplus(-static_cast<double>(v));
    lg /= static_cast<double>(d_fake_logits.numel());
    return {static_cast<T>(ld + lf), static_cast<T>(lg)};
}

// d(loss_D)/d(real_logits)
template <typename T>
Tensor<T> d_loss_grad_real(const Tensor<T>& real_logits) {
    Tensor<T> g = Tensor<T>::zeros_like(real_logits);
    const T n = static_cast<T>(real_logits.numel());
    for (size_t i = 0; i < g.data.size(); ++i)
        g.data[i] = -(T(1) - sigmoid(real_logits.data[i])) / n;
    return g;
}

// d(loss_D)/d(fake_logits)
template <typename T>
Tensor<T> d_loss_grad_fake(const Tensor<T>& fake_logits) {
    Tensor<T> g = Tensor<T>::zeros_like(fake_logits);
    const T n = static_cast<T>(fake_logits.numel());
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = sigmoid(fake_logits.data[i]) / n;
    return g;
}

// d(loss_G)/d(fake_logits), non-saturating form
template <typename T>
Tensor<T> g_loss_grad_fake(const Tensor<T>& fake_logits) {
    Tensor<T> g = Tensor<T>::zeros_like(fake_logits);
    const T n = static_cast<T>(fake_logits.numel());
    for (size_t i = 0; i < g.data.size(); ++i)
        g.data[i] = -(T(1) - sigmoid(fake_logits.data[i])) / n;
    return g;
}

// ---------------------------------------------------------------------------
// frozen convolutional feature pyramid standing in for the pretrained
// face-recognition features; five taps at increasing depth
// ---------------------------------------------------------------------------

struct ExtractorConfig {
    std::string id = "face_features";
    std::vector<int64_t> stage_channels = {8, 16, 32, 64, 64};
    uint64_t seed = 7001;

    static ExtractorConfig by_id(const std::string& id) {
        ExtractorConfig cfg;
        if (id == "face_features") {
            cfg = {id, {8, 16, 32, 64, 64}, 7001};
        } else if (id == "generic_features") {
            cfg = {id, {6, 12, 24, 48, 48}, 7002};
        } else {
            raise(ErrorCode::UnknownMode, "unknown feature extractor '" + id + "'");
        }
        return cfg;
    }
};

template <typename T>
class FeatureExtractor {
  public:
    explicit FeatureExtractor(const ExtractorConfig& cfg) : cfg_(cfg) {
        Rng rng(cfg.seed, 91);
        int64_t in_c = 3;
        for (size_t s = 0; s < cfg.stage_channels.size(); ++s) {
            int64_t stride = (s == 0) ? 1 : 2;
            stages_.emplace_back(std::make_unique<Conv2d<T>>(
                "P.stage" + std::to_string(s), in_c, cfg.stage_channels[s], 3, stride, 1,
                /*train_params=*/false));
            // wider fan-in scaling than the generator init keeps the frozen
            // features well-conditioned across depths
            auto* w = stages_.back()->params()[0];
            double stddev = std::sqrt(2.0 / (9.0 * static_cast<double>(in_c)));
            init_gaussian(w->value, rng, stddev);
            in_c = cfg.stage_channels[s];
        }
        acts_.assign(stages_.size(), LeakyReLU<T>(0.0));
    }

    const ExtractorConfig& config() const { return cfg_; }
    size_t num_taps() const { return stages_.size(); }

    // Frames enter as (B, 3, H, W); the taps are the post-activation stage outputs.
    std::vector<Tensor<T>> forward_taps(const Tensor<T>& frames) {
        require(frames.c == 3, ErrorCode::ShapeMismatch, "feature extractor wants RGB frames");
        std::vector<Tensor<T>> taps;
        Tensor<T> h = frames;
        for (size_t s = 0; s < stages_.size(); ++s) {
            h = stages_[s]->forward(h);
            h = acts_[s].forward(h);
            taps.push_back(h);
        }
        return taps;
    }

    // Backward from per-tap gradients to the input frames. Uses the saved
    // activations of the most recent forward_taps call.
    Tensor<T> backward_taps(const std::vector<Tensor<T>>& tap_grads) {
        require(tap_grads.size() == stages_.size(), ErrorCode::ShapeMismatch,
                "backward_taps: tap count");
        Tensor<T> g = tap_grads.back();
        for (size_t s = stages_.size(); s-- > 0;) {
            if (s + 1 < stages_.size()) g.add_(tap_grads[s]);
            g = acts_[s].backward(g);
            g = stages_[s]->backward(g);
        }
        return g;
    }

    uint64_t param_hash() const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& st : stages_) {
            for (auto* p : const_cast<Conv2d<T>&>(*st).params())
                h = hash_span(p->value.data.data(), p->value.data.size(), h);
        }
        return h;
    }

  private:
    ExtractorConfig cfg_;
    std::vector<std::unique_ptr<Conv2d<T>>> stages_;
    std::vector<LeakyReLU<T>> acts_;
};

// sum over taps of mean absolute feature difference
template <typename T>
T perceptual_loss(const Tensor<T>& pred_frames, const Tensor<T>& target_frames,
                  FeatureExtractor<T>& extractor) {
    require(pred_frames.same_shape(target_frames), ErrorCode::ShapeMismatch,
            "perceptual_loss: shape");
    auto tp = extractor.forward_taps(pred_frames);
    auto tt = extractor.forward_taps(target_frames);
    double total = 0.0;
    for (size_t s = 0; s < tp.size(); ++s) {
        double acc = 0.0;
        for (size_t i = 0; i < tp[s].data.size(); ++i)
            acc += std::abs(static_cast<double>(tp[s].data[i]) -
                            static_cast<double>(tt[s].data[i]));
        total += acc / static_cast<double>(tp[s].numel());
    }
    return static_cast<T>(total);
}

// loss and gradient w.r.t. pred_frames, scaled by `scale`
template <typename T>
std::pair<T, Tensor<T>> perceptual_loss_with_grad(const Tensor<T>& pred_frames,
                                                  const Tensor<T>& target_frames,
                                                  FeatureExtractor<T>& extractor, T scale) {
    require(pred_frames.same_shape(target_frames), ErrorCode::ShapeMismatch,
            "perceptual_loss: shape");
    auto tt = extractor.forward_taps(target_frames);
    auto tp = extractor.forward_taps(pred_frames);  // last: saved state = pred pass
    double total = 0.0;
    std::vector<Tensor<T>> tap_grads;
    for (size_t s = 0; s < tp.size(); ++s) {
        double acc = 0.0;
        Tensor<T> g = Tensor<T>::zeros_like(tp[s]);
        const T unit = scale / static_cast<T>(tp[s].numel());
        for (size_t i = 0; i < tp[s].data.size(); ++i) {
            T d = tp[s].data[i] - tt[s].data[i];
            acc += std::abs(static_cast<double>(d));
            g.data[i] = d > T(0) ? unit : (d < T(0) ? -unit : T(0));
        }
        total += acc / static_cast<double>(tp[s].numel());
        tap_grads.push_back(std::move(g));
    }
    Tensor<T> gx = extractor.backward_taps(tap_grads);
    return {static_cast<T>(total), std::move(gx)};
}

// Eq-style combination: adv + lambda1*content + lambda2*perceptual
template <typename T>
T total_generator_objective(T adv_g, T content, T perceptual, const LossWeights& w) {
    return adv_g + static_cast<T>(w.lambda1) * content + static_cast<T>(w.lambda2) * perceptual;
}

// view an (B, 3N, H, W) window stack as (B*N, 3, H, W) frames; same memory order
template <typename T>
Tensor<T> stack_as_frames(const Tensor<T>& stack) {
    require(stack.c % 3 == 0, ErrorCode::ShapeMismatch, "stack_as_frames: channels % 3");
    Tensor<T> out;
    out.b = stack.b * (stack.c / 3);
    out.c = 3;
    out.h = stack.h;
    out.w = stack.w;
    out.data = stack.data;
    return out;
}

}  // namespace ego2front::nn
