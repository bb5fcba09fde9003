#pragma once

#include <complex>
#include <vector>

#include "lss/tensor.hpp"

namespace lss {

// 2-d spectrum, unnormalized forward transform (exponent -1), row-major
// with frequency index k = u*w + v. ifft2 applies the 1/(h*w) factor.
struct Spectrum {
    int h = 0;
    int w = 0;
    std::vector<std::complex<double>> data;

    std::complex<double>& at(int u, int v) { return data[static_cast<size_t>(u) * w + v]; }
    std::complex<double> at(int u, int v) const { return data[static_cast<size_t>(u) * w + v]; }
};

Spectrum fft2(const double* x, int h, int w);
Spectrum fft2(const Tensor& x, int channel = 0);  // [c,h,w] or [h,w]
Tensor ifft2_real(const Spectrum& s);             // -> [1,h,w], imaginary part dropped

// y[c] = ifft2(gains .* fft2(x[c])) for every channel; gains has h*w real
// entries. This is how the closed-form predictors are applied.
Tensor apply_frequency_gains(const Tensor& x, const std::vector<double>& gains);

// Wrapped integer frequency components and radial frequency of bin (u,v).
inline int freq_component(int i, int n) { return i <= n / 2 ? i : i - n; }
inline double radial_freq(int u, int v, int h, int w) {
    double fu = freq_component(u, h);
    double fv = freq_component(v, w);
    return std::sqrt(fu * fu + fv * fv);
}

}  // namespace lss
