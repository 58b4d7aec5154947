#include "doctest.h"
#include "ego2front/model.hpp"

using namespace ego2front;
using namespace ego2front::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(int64_t b, int64_t c, int64_t h, int64_t w, Rng& rng,
                        double scale = 1.0) {
    Tensor<T> t(b, c, h, w);
    for (auto& v : t.data) v = static_cast<T>(rng.gaussian() * scale);
    return t;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("default generator config matches the published architecture") {
    GeneratorConfig cfg = GeneratorConfig::make(11, 256);
    CHECK(cfg.in_channels() == 66);
    CHECK(cfg.out_channels() == 33);
    CHECK(cfg.levels() == 7);
    CHECK(cfg.level_channels == std::vector<int64_t>{64, 128, 256, 512, 512, 512, 512});
    std::vector<int64_t> res;
    for (int64_t i = 0; i < cfg.levels(); ++i) res.push_back(cfg.level_resolution(i));
    CHECK(res == std::vector<int64_t>{128, 64, 32, 16, 8, 4, 2});
    CHECK(cfg.kernel == 4);
    CHECK(cfg.stride == 2);
}

TEST_CASE("lower resolutions truncate the deepest levels, innermost stays 2x2") {
    GeneratorConfig c128 = GeneratorConfig::make(11, 128);
    CHECK(c128.levels() == 6);
    CHECK(c128.level_resolution(c128.levels() - 1) == 2);
    GeneratorConfig c64 = GeneratorConfig::make(5, 64);
    CHECK(c64.levels() == 5);
    CHECK(c64.level_channels == std::vector<int64_t>{64, 128, 256, 512, 512});
    CHECK(c64.level_resolution(c64.levels() - 1) == 2);
}

TEST_CASE("parameter counts are pinned for the default configs") {
    Generator<float> g(GeneratorConfig::make(11, 256));
    CHECK(g.param_count() == 41960481);
    DiscriminatorConfig dc;
    dc.n_frames = 11;
    dc.resolution = 256;
    Discriminator<float> d(dc);
    CHECK(d.param_count() == 2859457);
}

TEST_CASE("tiny generator forward matches shapes and range") {
    GeneratorConfig cfg;
    cfg.n_frames = 2;
    cfg.resolution = 8;
    cfg.level_channels = {4, 8};
    cfg.validate();
    Generator<float> g(cfg);
    Rng rng(3, 1);
    g.init(rng);
    Tensor<float> x = random_tensor<float>(2, 12, 8, 8, rng, 0.5);
    Tensor<float> y = g.forward(x);
    CHECK(y.b == 2);
    CHECK(y.c == 6);
    CHECK(y.h == 8);
    CHECK(y.w == 8);
    for (float v : y.data) {
        CHECK(v > -1.0f);
        CHECK(v < 1.0f);
    }
}

TEST_CASE("zero-weight generator produces a constant in-range output") {
    GeneratorConfig cfg;
    cfg.n_frames = 1;
    cfg.resolution = 8;
    cfg.level_channels = {4, 8};
    Generator<float> g(cfg);  // weights default to zero, norm gains to one
    Rng rng(5, 2);
    Tensor<float> x = random_tensor<float>(1, 6, 8, 8, rng);
    Tensor<float> y = g.forward(x);
    CHECK(y.all_finite());
    for (float v : y.data) CHECK(v == y.data[0]);
}

TEST_CASE("tiny forward values match the direct-convolution reference kernels") {
    GeneratorConfig cfg;
    cfg.n_frames = 2;
    cfg.resolution = 8;
    cfg.level_channels = {4, 8};
    Rng rng(7, 3);
    Generator<float> g(cfg);
    g.init(rng);
    Tensor<float> x = random_tensor<float>(1, 12, 8, 8, rng, 0.7);

    set_backend(Backend::fast);
    Tensor<float> y_fast = g.forward(x);
    set_backend(Backend::reference);
    Tensor<float> y_ref = g.forward(x);
    set_backend(Backend::fast);

    REQUIRE(y_fast.same_shape(y_ref));
    double m = 0;
    for (size_t i = 0; i < y_fast.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(y_fast.data[i]) - y_ref.data[i]));
    CHECK(m < 1e-5);
}

TEST_CASE("discriminator patch map: 256 input, depth 4 -> 16x16") {
    DiscriminatorConfig dc;
    dc.n_frames = 1;
    dc.resolution = 256;
    dc.depth = 4;
    CHECK(dc.patch_map_size() == 16);
    Discriminator<float> d(dc);
    Rng rng(9, 4);
    d.init(rng);
    Tensor<float> x = random_tensor<float>(1, 9, 256, 256, rng, 0.3);
    Tensor<float> y = d.forward(x);
    CHECK(y.c == 1);
    CHECK(y.h == 16);
    CHECK(y.w == 16);
}

TEST_CASE("permuting the batch permutes discriminator outputs identically") {
    DiscriminatorConfig dc;
    dc.n_frames = 1;
    dc.resolution = 16;
    dc.depth = 2;
    Discriminator<float> d(dc);
    Rng rng(11, 5);
    d.init(rng);
    Tensor<float> x = random_tensor<float>(3, 9, 16, 16, rng, 0.4);
    Tensor<float> y = d.forward(x);

    Tensor<float> xp(3, 9, 16, 16);
    const int64_t sample = 9 * 16 * 16;
    int perm[3] = {2, 0, 1};
    for (int64_t b = 0; b < 3; ++b)
        std::copy(x.sample(perm[b]), x.sample(perm[b]) + sample, xp.sample(b));
    Tensor<float> yp = d.forward(xp);

    const int64_t out_sample = yp.c * yp.h * yp.w;
    for (int64_t b = 0; b < 3; ++b)
        for (int64_t i = 0; i < out_sample; ++i)
            CHECK(yp.sample(b)[i] == y.sample(perm[b])[i]);
}

TEST_CASE("patch logits ignore pixels outside their receptive field") {
    // depth 4 with the 3x3 head has a 78 px receptive field; at 256 input the
    // top-left patch cannot see the bottom-right corner
    DiscriminatorConfig dc;
    dc.n_frames = 1;
    dc.resolution = 256;
    dc.depth = 4;
    Discriminator<float> d(dc);
    Rng rng(13, 6);
    d.init(rng);
    Tensor<float> x = random_tensor<float>(1, 9, 256, 256, rng, 0.3);
    Tensor<float> y0 = d.forward(x);

    Tensor<float> x2 = x;
    for (int64_t c = 0; c < 9; ++c)
        for (int64_t yy = 176; yy < 256; ++yy)
            for (int64_t xx = 176; xx < 256; ++xx) x2.at(0, c, yy, xx) = 0.0f;
    Tensor<float> y1 = d.forward(x2);
    CHECK(std::abs(y1.at(0, 0, 0, 0) - y0.at(0, 0, 0, 0)) <= 1e-6);
    CHECK(std::abs(y1.at(0, 0, 0, 1) - y0.at(0, 0, 0, 1)) <= 1e-6);
    // while patches near the zeroed region do change
    CHECK(std::abs(y1.at(0, 0, 15, 15) - y0.at(0, 0, 15, 15)) > 1e-6);
}

TEST_CASE("generator rejects mismatched input shapes") {
    GeneratorConfig cfg;
    cfg.n_frames = 1;
    cfg.resolution = 8;
    cfg.level_channels = {4, 8};
    Generator<float> g(cfg);
    Tensor<float> bad(1, 5, 8, 8);
    CHECK_THROWS_AS(g.forward(bad), Error);
}

TEST_SUITE_END();
