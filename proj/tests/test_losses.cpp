#include <cmath>

#include "doctest.h"
#include "ego2front/losses.hpp"

using namespace ego2front;
using namespace ego2front::nn;

namespace {

template <typename T>
Tensor<T> filled(int64_t b, int64_t c, int64_t h, int64_t w, T v) {
    Tensor<T> t(b, c, h, w);
    t.fill(v);
    return t;
}

template <typename T>
Tensor<T> random_tensor(int64_t b, int64_t c, int64_t h, int64_t w, Rng& rng,
                        double scale = 1.0) {
    Tensor<T> t(b, c, h, w);
    for (auto& v : t.data) v = static_cast<T>(rng.gaussian() * scale);
    return t;
}

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("content loss closed forms") {
    auto target = filled<double>(1, 3, 4, 4, 1.0);
    auto pred = filled<double>(1, 3, 4, 4, 0.25);
    CHECK(content_loss(pred, target) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(content_loss(target, target) == 0.0);

    SUBCASE("homogeneity: scaling the gap scales the loss") {
        Rng rng(3, 1);
        auto a = random_tensor<double>(1, 2, 5, 5, rng);
        auto zero = filled<double>(1, 2, 5, 5, 0.0);
        double l1 = content_loss(a, zero);
        auto a3 = a;
        a3.scale_(3.0);
        CHECK(content_loss(a3, zero) == doctest::Approx(3.0 * l1).epsilon(1e-12));
    }

    SUBCASE("shape mismatch") {
        auto small = filled<double>(1, 3, 2, 2, 0.0);
        CHECK_THROWS_AS(content_loss(pred, small), Error);
    }
}

TEST_CASE("adversarial losses at zero logits: 2 ln 2 and ln 2") {
    auto zeros = filled<double>(1, 1, 3, 3, 0.0);
    auto l = adversarial_losses(zeros, zeros);
    CHECK(l.loss_d == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
    CHECK(l.loss_g == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("perfect discriminator drives loss_D to zero") {
    auto real = filled<double>(1, 1, 2, 2, 100.0);
    auto fake = filled<double>(1, 1, 2, 2, -100.0);
    auto l = adversarial_losses(real, fake);
    CHECK(l.loss_d < 1e-9);
}

TEST_CASE("adversarial losses stay finite at logit magnitude 1000") {
    auto big = filled<double>(1, 1, 2, 2, 1000.0);
    auto neg = filled<double>(1, 1, 2, 2, -1000.0);
    auto l1 = adversarial_losses(big, neg);
    CHECK(std::isfinite(l1.loss_d));
    CHECK(std::isfinite(l1.loss_g));
    auto l2 = adversarial_losses(neg, big);
    CHECK(std::isfinite(l2.loss_d));
    CHECK(std::isfinite(l2.loss_g));

    auto nan = filled<double>(1, 1, 1, 1, std::nan(""));
    CHECK_THROWS_AS(adversarial_losses(nan, big), Error);
}

TEST_CASE("adversarial gradients match finite differences of the scalar forms") {
    Rng rng(5, 2);
    auto real = random_tensor<double>(1, 1, 3, 3, rng, 2.0);
    auto fake = random_tensor<double>(1, 1, 3, 3, rng, 2.0);
    const double eps = 1e-6;

    auto gd_real = d_loss_grad_real(real);
    auto gd_fake = d_loss_grad_fake(fake);
    auto gg_fake = g_loss_grad_fake(fake);
    for (size_t i = 0; i < real.data.size(); ++i) {
        auto rp = real, rm = real;
        rp.data[i] += eps;
        rm.data[i] -= eps;
        double fd = (adversarial_losses(rp, fake).loss_d -
                     adversarial_losses(rm, fake).loss_d) / (2 * eps);
        CHECK(gd_real.data[i] == doctest::Approx(fd).epsilon(1e-5));

        auto fp = fake, fm = fake;
        fp.data[i] += eps;
        fm.data[i] -= eps;
        double fd2 = (adversarial_losses(real, fp).loss_d -
                      adversarial_losses(real, fm).loss_d) / (2 * eps);
        CHECK(gd_fake.data[i] == doctest::Approx(fd2).epsilon(1e-5));
        double fd3 = (adversarial_losses(real, fp).loss_g -
                      adversarial_losses(real, fm).loss_g) / (2 * eps);
        CHECK(gg_fake.data[i] == doctest::Approx(fd3).epsilon(1e-5));
    }
}

TEST_CASE("perceptual loss: zero at equality, symmetric, matches per-layer recomputation") {
    FeatureExtractor<double> ex(ExtractorConfig::by_id("face_features"));
    Rng rng(7, 3);
    auto a = random_tensor<double>(2, 3, 16, 16, rng, 0.5);
    auto b = random_tensor<double>(2, 3, 16, 16, rng, 0.5);

    CHECK(perceptual_loss(a, a, ex) == 0.0);
    CHECK(perceptual_loss(a, b, ex) ==
          doctest::Approx(perceptual_loss(b, a, ex)).epsilon(1e-12));

    // independent per-layer recomputation from the taps
    auto ta = ex.forward_taps(a);
    auto tb = ex.forward_taps(b);
    double manual = 0;
    for (size_t s = 0; s < ta.size(); ++s) {
        double acc = 0;
        for (size_t i = 0; i < ta[s].data.size(); ++i)
            acc += std::abs(ta[s].data[i] - tb[s].data[i]);
        manual += acc / static_cast<double>(ta[s].numel());
    }
    CHECK(perceptual_loss(a, b, ex) == doctest::Approx(manual).epsilon(1e-6));
    CHECK(ex.num_taps() == 5);
}

TEST_CASE("extractor variants differ and are frozen") {
    FeatureExtractor<float> face(ExtractorConfig::by_id("face_features"));
    FeatureExtractor<float> generic(ExtractorConfig::by_id("generic_features"));
    CHECK(face.param_hash() != generic.param_hash());
    CHECK_THROWS_AS(ExtractorConfig::by_id("bogus"), Error);

    uint64_t before = face.param_hash();
    Rng rng(9, 4);
    auto a = random_tensor<float>(1, 3, 8, 8, rng);
    auto taps = face.forward_taps(a);
    std::vector<Tensor<float>> grads;
    for (auto& t : taps) grads.push_back(Tensor<float>::zeros_like(t));
    grads[0].fill(0.1f);
    face.backward_taps(grads);
    CHECK(face.param_hash() == before);
}

TEST_CASE("total objective combination: paper weights") {
    LossWeights w;
    CHECK(w.lambda1 == 10.0);
    CHECK(w.lambda2 == 0.0025);
    CHECK(total_generator_objective(0.0, 0.0, 0.0, w) == 0.0);
    CHECK(total_generator_objective(0.7, 0.5, 100.0, w) ==
          doctest::Approx(5.95).epsilon(1e-12));
    LossWeights w2{2.0, 0.0};
    CHECK(total_generator_objective(0.0, 1.0, 0.0, w2) == doctest::Approx(2.0));
}

TEST_CASE("stack content loss equals the mean of per-frame content losses") {
    Rng rng(11, 5);
    auto stack_a = random_tensor<float>(1, 9, 6, 6, rng);  // N=3 frames
    auto stack_b = random_tensor<float>(1, 9, 6, 6, rng);
    float whole = content_loss(stack_a, stack_b);
    auto fa = stack_as_frames(stack_a);
    auto fb = stack_as_frames(stack_b);
    REQUIRE(fa.b == 3);
    double acc = 0;
    for (int64_t f = 0; f < 3; ++f) {
        Tensor<float> a1(1, 3, 6, 6), b1(1, 3, 6, 6);
        std::copy(fa.sample(f), fa.sample(f) + a1.numel(), a1.data.begin());
        std::copy(fb.sample(f), fb.sample(f) + b1.numel(), b1.data.begin());
        acc += content_loss(a1, b1);
    }
    CHECK(whole == doctest::Approx(acc / 3.0).epsilon(1e-6));
}

TEST_SUITE_END();
