// Benchmarks the fast convolution path (im2col + GEMM, OpenMP/BLAS) against
// the serial reference kernels on layer shapes taken from the real model.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "ego2front/kernels.hpp"
#include "ego2front/rng.hpp"

using namespace ego2front;
using namespace ego2front::nn;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

void fill_random(std::vector<float>& v, Rng& rng) {
    for (auto& x : v) x = static_cast<float>(rng.gaussian() * 0.1);
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

struct Case {
    const char* name;
    ConvSpec spec;
};

void bench_case(const Case& c, int reps) {
    Rng rng(42, 5);
    const ConvSpec& s = c.spec;
    std::vector<float> x(static_cast<size_t>(s.in_c * s.in_h * s.in_w));
    std::vector<float> w(static_cast<size_t>(s.out_c * s.in_c * s.k * s.k));
    std::vector<float> bias(static_cast<size_t>(s.out_c));
    std::vector<float> y_ref(static_cast<size_t>(s.out_c * s.out_h() * s.out_w()));
    std::vector<float> y_fast(y_ref.size());
    std::vector<float> cols;
    fill_random(x, rng);
    fill_random(w, rng);
    fill_random(bias, rng);

    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        kernels::ref::conv2d_forward(x.data(), w.data(), bias.data(), s, y_ref.data());
    double t_ref = ms_since(t0) / reps;

    kernels::fast::conv2d_forward(x.data(), w.data(), bias.data(), s, y_fast.data(), cols);
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        kernels::fast::conv2d_forward(x.data(), w.data(), bias.data(), s, y_fast.data(), cols);
    double t_fast = ms_since(t0) / reps;

    double gflop = 2.0 * s.out_c * s.out_h() * s.out_w() * s.in_c * s.k * s.k / 1e9;
    std::printf("%-28s ref %8.2f ms   fast %8.2f ms   speedup %6.1fx   %6.1f GFLOP/s   max|d| %.2e\n",
                c.name, t_ref, t_fast, t_ref / t_fast, gflop / (t_fast / 1e3),
                max_abs_diff(y_ref, y_fast));
}

}  // namespace

int main(int argc, char** argv) {
    int reps = argc > 1 ? std::atoi(argv[1]) : 3;
    std::printf("conv2d forward, serial reference vs im2col+GEMM (reps=%d)\n", reps);
#ifdef EGO2FRONT_USE_BLAS
    std::printf("fast path GEMM: BLAS\n");
#else
    std::printf("fast path GEMM: OpenMP fallback\n");
#endif
#ifdef _OPENMP
    std::printf("OpenMP enabled\n");
#endif

    std::vector<Case> cases = {
        {"enc1 256px 66->64", {66, 256, 256, 64, 4, 2, 1}},
        {"enc2 128px 64->128", {64, 128, 128, 128, 4, 2, 1}},
        {"enc4 32px 256->512", {256, 32, 32, 512, 4, 2, 1}},
        {"enc1 64px 30->64 (N=5)", {30, 64, 64, 64, 4, 2, 1}},
        {"enc3 16px 128->256", {128, 16, 16, 256, 4, 2, 1}},
        {"disc1 64px 45->64 (N=5)", {45, 64, 64, 64, 4, 2, 1}},
    };
    for (const auto& c : cases) bench_case(c, reps);
    return 0;
}
