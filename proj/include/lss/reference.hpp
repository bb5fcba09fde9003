#pragma once

#include <complex>
#include <vector>

#include "lss/tensor.hpp"

// Serial reference kernels. Deliberately naive (plain nested loops, direct
// O(n^2) transforms, scatter-form transpose) and kept independent of the
// fast implementations so tests can compare the two routes. The benchmark
// target times them against the parallel kernels.
namespace lss::ref {

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor* bias,
              int stride, int pad);

Tensor conv_transpose2d(const Tensor& input, const Tensor& weights,
                        const Tensor* bias, int stride);

Tensor avg_pool2(const Tensor& x);

// Direct-summation 2-d DFT, forward exponent -1, unnormalized; the inverse
// divides by h*w. Used as the oracle for the fast FFT.
std::vector<std::complex<double>> dft2(const double* x, int h, int w);
std::vector<double> idft2_real(const std::vector<std::complex<double>>& s, int h, int w);

}  // namespace lss::ref
