#include "doctest.h"
#include "ego2front/kernels.hpp"
#include "ego2front/rng.hpp"

using namespace ego2front;
using namespace ego2front::nn;

namespace {

template <typename T>
std::vector<T> random_vec(size_t n, Rng& rng, double scale = 1.0) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng.gaussian() * scale);
    return v;
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

template <typename T>
double dot(const std::vector<T>& a, const std::vector<T>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("gemm variants agree with the serial triple loop") {
    Rng rng(7, 1);
    const int64_t m = 13, n = 17, k = 11;
    auto a = random_vec<double>(m * k, rng);
    auto b = random_vec<double>(k * n, rng);
    for (bool ta : {false, true}) {
        for (bool tb : {false, true}) {
            std::vector<double> c0(m * n, 0.5), c1(m * n, 0.5);
            int64_t lda = ta ? m : k;
            int64_t ldb = tb ? k : n;
            kernels::gemm_serial(ta, tb, m, n, k, 1.3, a.data(), lda, b.data(), ldb, 0.7,
                                 c0.data(), n);
            kernels::gemm_omp(ta, tb, m, n, k, 1.3, a.data(), lda, b.data(), ldb, 0.7,
                              c1.data(), n);
            CHECK(max_abs_diff(c0, c1) == doctest::Approx(0.0).epsilon(0).scale(1));
#ifdef EGO2FRONT_USE_BLAS
            std::vector<double> c2(m * n, 0.5);
            kernels::gemm_blas(ta, tb, m, n, k, 1.3, a.data(), lda, b.data(), ldb, 0.7,
                               c2.data(), n);
            CHECK(max_abs_diff(c0, c2) < 1e-12);
#endif
        }
    }
}

TEST_CASE("fast conv forward matches the direct-loop reference") {
    Rng rng(11, 2);
    ConvSpec s{5, 12, 10, 7, 4, 2, 1};
    auto x = random_vec<float>(static_cast<size_t>(s.in_c * s.in_h * s.in_w), rng);
    auto w = random_vec<float>(static_cast<size_t>(s.out_c * s.in_c * s.k * s.k), rng);
    auto b = random_vec<float>(static_cast<size_t>(s.out_c), rng);
    std::vector<float> y0(static_cast<size_t>(s.out_c * s.out_h() * s.out_w()));
    std::vector<float> y1(y0.size());
    std::vector<float> cols;
    kernels::ref::conv2d_forward(x.data(), w.data(), b.data(), s, y0.data());
    kernels::fast::conv2d_forward(x.data(), w.data(), b.data(), s, y1.data(), cols);
    CHECK(max_abs_diff(y0, y1) < 1e-5);
}

TEST_CASE("fast conv backward matches the reference") {
    Rng rng(13, 3);
    ConvSpec s{4, 8, 8, 6, 4, 2, 1};
    const size_t nx = static_cast<size_t>(s.in_c * s.in_h * s.in_w);
    const size_t nw = static_cast<size_t>(s.out_c * s.in_c * s.k * s.k);
    const size_t ny = static_cast<size_t>(s.out_c * s.out_h() * s.out_w());
    auto x = random_vec<double>(nx, rng);
    auto w = random_vec<double>(nw, rng);
    auto gy = random_vec<double>(ny, rng);

    std::vector<double> gx0(nx), gx1(nx);
    kernels::ref::conv2d_backward_input(gy.data(), w.data(), s, gx0.data());
    std::vector<double> cols;
    kernels::fast::conv2d_backward_input(gy.data(), w.data(), s, gx1.data(), cols);
    CHECK(max_abs_diff(gx0, gx1) < 1e-12);

    std::vector<double> gw0(nw, 0), gw1(nw, 0), gb0(s.out_c, 0), gb1(s.out_c, 0);
    kernels::ref::conv2d_backward_weight(x.data(), gy.data(), s, gw0.data(), gb0.data());
    kernels::fast::conv2d_backward_weight(x.data(), gy.data(), s, gw1.data(), gb1.data(), cols);
    CHECK(max_abs_diff(gw0, gw1) < 1e-12);
    CHECK(max_abs_diff(gb0, gb1) < 1e-12);
}

TEST_CASE("transposed conv agrees between fast and reference") {
    Rng rng(17, 4);
    ConvTransposeSpec s{6, 5, 5, 4, 4, 2, 1};
    const size_t nx = static_cast<size_t>(s.in_c * s.in_h * s.in_w);
    const size_t nw = static_cast<size_t>(s.in_c * s.out_c * s.k * s.k);
    const size_t ny = static_cast<size_t>(s.out_c * s.out_h() * s.out_w());
    auto x = random_vec<double>(nx, rng);
    auto w = random_vec<double>(nw, rng);
    auto b = random_vec<double>(static_cast<size_t>(s.out_c), rng);
    auto gy = random_vec<double>(ny, rng);

    std::vector<double> y0(ny), y1(ny), cols;
    kernels::ref::conv_transpose2d_forward(x.data(), w.data(), b.data(), s, y0.data());
    kernels::fast::conv_transpose2d_forward(x.data(), w.data(), b.data(), s, y1.data(), cols);
    CHECK(max_abs_diff(y0, y1) < 1e-12);

    std::vector<double> gx0(nx), gx1(nx);
    kernels::ref::conv_transpose2d_backward_input(gy.data(), w.data(), s, gx0.data());
    kernels::fast::conv_transpose2d_backward_input(gy.data(), w.data(), s, gx1.data(), cols);
    CHECK(max_abs_diff(gx0, gx1) < 1e-12);

    std::vector<double> gw0(nw, 0), gw1(nw, 0), gb0(s.out_c, 0), gb1(s.out_c, 0);
    kernels::ref::conv_transpose2d_backward_weight(x.data(), gy.data(), s, gw0.data(),
                                                   gb0.data());
    kernels::fast::conv_transpose2d_backward_weight(x.data(), gy.data(), s, gw1.data(),
                                                    gb1.data(), cols);
    CHECK(max_abs_diff(gw0, gw1) < 1e-12);
    CHECK(max_abs_diff(gb0, gb1) < 1e-12);
}

TEST_CASE("conv and transposed conv are adjoint: <conv(x), y> == <x, convT(y)>") {
    // shared weights, convT consumes the conv output grid
    Rng rng(19, 5);
    ConvSpec cs{3, 8, 8, 5, 4, 2, 1};
    ConvTransposeSpec ts{5, cs.out_h(), cs.out_w(), 3, 4, 2, 1};
    const size_t nx = static_cast<size_t>(cs.in_c * cs.in_h * cs.in_w);
    const size_t ny = static_cast<size_t>(cs.out_c * cs.out_h() * cs.out_w());
    auto x = random_vec<double>(nx, rng);
    auto y = random_vec<double>(ny, rng);
    auto w = random_vec<double>(static_cast<size_t>(cs.out_c * cs.in_c * 16), rng);

    std::vector<double> cx(ny);
    kernels::ref::conv2d_forward(x.data(), w.data(), nullptr, cs, cx.data());

    // convT weight layout (in_c=cs.out_c, out_c=cs.in_c) shares the conv layout
    std::vector<double> ty(nx);
    kernels::ref::conv_transpose2d_forward(y.data(), w.data(), nullptr, ts, ty.data());

    CHECK(dot(cx, y) == doctest::Approx(dot(x, ty)).epsilon(1e-10));
}

TEST_CASE("im2col / col2im are adjoint") {
    Rng rng(23, 6);
    ConvSpec s{3, 6, 7, 1, 4, 2, 1};
    const size_t nx = static_cast<size_t>(s.in_c * s.in_h * s.in_w);
    const size_t nc = static_cast<size_t>(s.in_c * s.k * s.k * s.out_h() * s.out_w());
    auto x = random_vec<double>(nx, rng);
    auto y = random_vec<double>(nc, rng);
    std::vector<double> cx(nc), ty(nx);
    kernels::im2col(x.data(), s, cx.data());
    kernels::col2im(y.data(), s, ty.data());
    CHECK(dot(cx, y) == doctest::Approx(dot(x, ty)).epsilon(1e-10));
}

TEST_CASE("results are identical for any OpenMP thread count") {
    Rng rng(29, 7);
    ConvSpec s{8, 16, 16, 12, 4, 2, 1};
    auto x = random_vec<float>(static_cast<size_t>(s.in_c * s.in_h * s.in_w), rng);
    auto w = random_vec<float>(static_cast<size_t>(s.out_c * s.in_c * 16), rng);
    std::vector<float> cols;
    std::vector<float> y1(static_cast<size_t>(s.out_c * s.out_h() * s.out_w()));
    std::vector<float> y4(y1.size());
#ifdef _OPENMP
    omp_set_num_threads(1);
#endif
    kernels::fast::conv2d_forward(x.data(), w.data(), nullptr, s, y1.data(), cols);
#ifdef _OPENMP
    omp_set_num_threads(4);
#endif
    kernels::fast::conv2d_forward(x.data(), w.data(), nullptr, s, y4.data(), cols);
#ifdef _OPENMP
    omp_set_num_threads(1);
#endif
    CHECK(max_abs_diff(y1, y4) == 0.0);
}

TEST_SUITE_END();
