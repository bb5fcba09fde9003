// Timing comparison between the OpenMP kernels and the serial reference
// implementations. Build with -DCMAKE_BUILD_TYPE=Release, run with
// LSS_THREADS set to the thread counts you want to compare.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "lss/kernels.hpp"
#include "lss/reference.hpp"
#include "lss/rng.hpp"
#include "lss/tensor.hpp"

using namespace lss;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const std::string& name, double fast_ms, double ref_ms, double diff) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx   max|diff| %.2e\n", name.c_str(), fast_ms, ref_ms,
                ref_ms / fast_ms, diff);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

int main() {
    Rng rng(7);
    std::printf("threads: %d\n", max_threads());
    std::printf("%-28s %13s %13s %9s\n", "kernel", "openmp", "reference", "speedup");

    {
        Tensor x = rng.normal_tensor({8, 64, 64});
        Tensor w = rng.normal_tensor({16, 8, 3, 3});
        Tensor fast = conv2d(x, w, nullptr, 1, 1);
        Tensor slow = ref::conv2d(x, w, nullptr, 1, 1);
        report("conv2d 8x64x64 -> 16", time_ms([&] { conv2d(x, w, nullptr, 1, 1); }, 5),
               time_ms([&] { ref::conv2d(x, w, nullptr, 1, 1); }, 5), max_abs_diff(fast, slow));
    }
    {
        Tensor x = rng.normal_tensor({16, 32, 32});
        Tensor w = rng.normal_tensor({16, 8, 4, 4});
        Tensor fast = conv_transpose2d(x, w, nullptr, 2);
        Tensor slow = ref::conv_transpose2d(x, w, nullptr, 2);
        report("conv_transpose2d 32 -> 64", time_ms([&] { conv_transpose2d(x, w, nullptr, 2); }, 5),
               time_ms([&] { ref::conv_transpose2d(x, w, nullptr, 2); }, 5), max_abs_diff(fast, slow));
    }
    {
        Tensor x = rng.normal_tensor({8, 128, 128});
        Tensor fast = avg_pool2(x);
        Tensor slow = ref::avg_pool2(x);
        report("avg_pool2 8x128x128", time_ms([&] { avg_pool2(x); }, 20),
               time_ms([&] { ref::avg_pool2(x); }, 20), max_abs_diff(fast, slow));
    }
    return 0;
}
