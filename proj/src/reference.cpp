#include "lss/reference.hpp"

#include <cmath>

#include "lss/kernels.hpp"

namespace lss::ref {

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor* bias,
              int stride, int pad) {
    int ci = input.dim(0), h = input.dim(1), w = input.dim(2);
    int co = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    if (weights.dim(1) != ci) throw std::invalid_argument("ref::conv2d: channel mismatch");
    int oh = (h + 2 * pad - kh) / stride + 1;
    int ow = (w + 2 * pad - kw) / stride + 1;
    Tensor out({co, oh, ow});
    for (int o = 0; o < co; ++o)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias ? (*bias)[o] : 0.0;
                for (int i = 0; i < ci; ++i)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            int y = oy * stride + ky - pad;
                            int x = ox * stride + kx - pad;
                            if (y < 0 || y >= h || x < 0 || x >= w) continue;
                            acc += weights.at4(o, i, ky, kx) * input.at3(i, y, x);
                        }
                out.at3(o, oy, ox) = acc;
            }
    return out;
}

// Scatter form: walk the (virtual) forward conv and accumulate transposed
// contributions. The fast kernel uses the gather form instead.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weights,
                        const Tensor* bias, int stride) {
    int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (weights.dim(0) != cin) throw std::invalid_argument("ref::conv_transpose2d: channel mismatch");
    int cout = weights.dim(1), kh = weights.dim(2), kw = weights.dim(3);
    int pad = conv_transpose_pad(kh, stride);
    int oh = stride * h, ow = stride * w;
    Tensor out({cout, oh, ow});
    for (int c = 0; c < cout; ++c)
        for (int i = 0; i < static_cast<int>(oh) * ow; ++i)
            out[static_cast<int64_t>(c) * oh * ow + i] = bias ? (*bias)[c] : 0.0;
    for (int ic = 0; ic < cin; ++ic)
        for (int iy = 0; iy < h; ++iy)
            for (int ix = 0; ix < w; ++ix) {
                double v = input.at3(ic, iy, ix);
                for (int oc = 0; oc < cout; ++oc)
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx) {
                            int y = iy * stride + ky - pad;
                            int x = ix * stride + kx - pad;
                            if (y < 0 || y >= oh || x < 0 || x >= ow) continue;
                            out.at3(oc, y, x) += weights.at4(ic, oc, ky, kx) * v;
                        }
            }
    return out;
}

Tensor avg_pool2(const Tensor& x) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out({c, h / 2, w / 2});
    for (int i = 0; i < c; ++i)
        for (int y = 0; y < h / 2; ++y)
            for (int xo = 0; xo < w / 2; ++xo)
                out.at3(i, y, xo) = 0.25 * (x.at3(i, 2 * y, 2 * xo) + x.at3(i, 2 * y, 2 * xo + 1) +
                                            x.at3(i, 2 * y + 1, 2 * xo) + x.at3(i, 2 * y + 1, 2 * xo + 1));
    return out;
}

std::vector<std::complex<double>> dft2(const double* x, int h, int w) {
    std::vector<std::complex<double>> out(static_cast<size_t>(h) * w);
    for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    double ang = -2.0 * M_PI * (static_cast<double>(u) * y / h + static_cast<double>(v) * xx / w);
                    acc += x[static_cast<size_t>(y) * w + xx] * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[static_cast<size_t>(u) * w + v] = acc;
        }
    return out;
}

std::vector<double> idft2_real(const std::vector<std::complex<double>>& s, int h, int w) {
    std::vector<double> out(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::complex<double> acc(0.0, 0.0);
            for (int u = 0; u < h; ++u)
                for (int v = 0; v < w; ++v) {
                    double ang = 2.0 * M_PI * (static_cast<double>(u) * y / h + static_cast<double>(v) * x / w);
                    acc += s[static_cast<size_t>(u) * w + v] * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[static_cast<size_t>(y) * w + x] = acc.real() / (static_cast<double>(h) * w);
        }
    return out;
}

}  // namespace lss::ref
