#include "lss/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "lss/kernels.hpp"

namespace lss {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 transform; sign -1 forward, +1 inverse (no
// normalization here).
void fft_pow2(std::complex<double>* a, int n, int sign) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * M_PI / len;
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Direct transform for the odd sizes; everything in the project is a power
// of two, this keeps the function total.
void dft_any(const std::complex<double>* in, std::complex<double>* out, int n, int sign) {
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < n; ++j) {
            double ang = sign * 2.0 * M_PI * k * j / n;
            acc += in[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
}

void transform_rows(std::vector<std::complex<double>>& a, int h, int w, int sign) {
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (int y = 0; y < h; ++y) {
        std::complex<double>* row = a.data() + static_cast<size_t>(y) * w;
        if (is_pow2(w)) {
            fft_pow2(row, w, sign);
        } else {
            std::vector<std::complex<double>> tmp(row, row + w);
            dft_any(tmp.data(), row, w, sign);
        }
    }
}

void transform_cols(std::vector<std::complex<double>>& a, int h, int w, int sign) {
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (int x = 0; x < w; ++x) {
        std::vector<std::complex<double>> col(static_cast<size_t>(h));
        for (int y = 0; y < h; ++y) col[static_cast<size_t>(y)] = a[static_cast<size_t>(y) * w + x];
        if (is_pow2(h)) {
            fft_pow2(col.data(), h, sign);
        } else {
            std::vector<std::complex<double>> tmp = col;
            dft_any(tmp.data(), col.data(), h, sign);
        }
        for (int y = 0; y < h; ++y) a[static_cast<size_t>(y) * w + x] = col[static_cast<size_t>(y)];
    }
}

}  // namespace

Spectrum fft2(const double* x, int h, int w) {
    if (h < 1 || w < 1) throw std::invalid_argument("fft2: empty input");
    Spectrum s;
    s.h = h;
    s.w = w;
    s.data.assign(static_cast<size_t>(h) * w, {0.0, 0.0});
    for (size_t i = 0; i < s.data.size(); ++i) s.data[i] = x[i];
    transform_rows(s.data, h, w, -1);
    transform_cols(s.data, h, w, -1);
    return s;
}

Spectrum fft2(const Tensor& x, int channel) {
    if (x.rank() == 2) {
        if (channel != 0) throw std::invalid_argument("fft2: channel out of range");
        return fft2(x.ptr(), x.dim(0), x.dim(1));
    }
    if (x.rank() == 3) {
        if (channel < 0 || channel >= x.dim(0)) throw std::invalid_argument("fft2: channel out of range");
        int h = x.dim(1), w = x.dim(2);
        return fft2(x.ptr() + static_cast<int64_t>(channel) * h * w, h, w);
    }
    throw std::invalid_argument("fft2: expected [h,w] or [c,h,w], got " + x.shape_str());
}

Tensor ifft2_real(const Spectrum& s) {
    std::vector<std::complex<double>> a = s.data;
    transform_rows(a, s.h, s.w, +1);
    transform_cols(a, s.h, s.w, +1);
    Tensor out({1, s.h, s.w});
    double norm = 1.0 / (static_cast<double>(s.h) * s.w);
    for (size_t i = 0; i < a.size(); ++i) out[static_cast<int64_t>(i)] = a[i].real() * norm;
    return out;
}

Tensor apply_frequency_gains(const Tensor& x, const std::vector<double>& gains) {
    if (x.rank() != 3) throw std::invalid_argument("apply_frequency_gains: expected [c,h,w]");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (gains.size() != static_cast<size_t>(h) * w) {
        throw std::invalid_argument("apply_frequency_gains: gain table size mismatch");
    }
    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch) {
        Spectrum s = fft2(x, ch);
        for (size_t i = 0; i < s.data.size(); ++i) s.data[i] *= gains[i];
        Tensor y = ifft2_real(s);
        for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
            out[static_cast<int64_t>(ch) * h * w + i] = y[i];
        }
    }
    return out;
}

}  // namespace lss
