#include "lss/kernels.hpp"

#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lss {

int max_threads() {
    static int n = [] {
        const char* env = std::getenv("LSS_THREADS");
        if (env) {
            int v = std::atoi(env);
            if (v > 0) return v;
        }
#ifdef _OPENMP
        return omp_get_max_threads();
#else
        return 1;
#endif
    }();
    return n;
}

// Every parallel loop below assigns each output element to exactly one
// thread with a fixed accumulation order, so results are bit-identical
// regardless of thread count.

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor* bias,
              int stride, int pad) {
    if (input.rank() != 3 || weights.rank() != 4) {
        throw std::invalid_argument("conv2d: expected input [c,h,w], weights [co,ci,kh,kw]");
    }
    int ci = input.dim(0), h = input.dim(1), w = input.dim(2);
    int co = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    if (weights.dim(1) != ci) {
        throw std::invalid_argument("conv2d: weight channels " + weights.shape_str() +
                                    " do not match input " + input.shape_str());
    }
    if (bias && (bias->rank() != 1 || bias->dim(0) != co)) {
        throw std::invalid_argument("conv2d: bad bias shape");
    }
    if (stride < 1 || pad < 0 || h + 2 * pad < kh || w + 2 * pad < kw) {
        throw std::invalid_argument("conv2d: invalid geometry");
    }
    int oh = (h + 2 * pad - kh) / stride + 1;
    int ow = (w + 2 * pad - kw) / stride + 1;
    Tensor out({co, oh, ow});
#pragma omp parallel for collapse(2) schedule(static) num_threads(max_threads())
    for (int o = 0; o < co; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias ? (*bias)[o] : 0.0;
                int y0 = oy * stride - pad;
                int x0 = ox * stride - pad;
                for (int i = 0; i < ci; ++i) {
                    for (int ky = 0; ky < kh; ++ky) {
                        int y = y0 + ky;
                        if (y < 0 || y >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            int x = x0 + kx;
                            if (x < 0 || x >= w) continue;
                            acc += weights.at4(o, i, ky, kx) * input.at3(i, y, x);
                        }
                    }
                }
                out.at3(o, oy, ox) = acc;
            }
        }
    }
    return out;
}

int conv_transpose_pad(int k, int stride) {
    int p = (k - stride + 1) / 2;  // ceil((k - stride) / 2)
    return p > 0 ? p : 0;
}

// Gather form of the adjoint: for each output pixel, collect the forward
// conv outputs it would have contributed to.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weights,
                        const Tensor* bias, int stride) {
    if (input.rank() != 3 || weights.rank() != 4) {
        throw std::invalid_argument("conv_transpose2d: expected input [c,h,w], weights [cin,cout,kh,kw]");
    }
    int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (weights.dim(0) != cin) {
        throw std::invalid_argument("conv_transpose2d: weight channels " + weights.shape_str() +
                                    " do not match input " + input.shape_str());
    }
    int cout = weights.dim(1), kh = weights.dim(2), kw = weights.dim(3);
    if (stride < 1) throw std::invalid_argument("conv_transpose2d: invalid stride");
    if (bias && (bias->rank() != 1 || bias->dim(0) != cout)) {
        throw std::invalid_argument("conv_transpose2d: bad bias shape");
    }
    int pad = conv_transpose_pad(kh, stride);
    int padx = conv_transpose_pad(kw, stride);
    int oh = stride * h, ow = stride * w;
    Tensor out({cout, oh, ow});
#pragma omp parallel for collapse(2) schedule(static) num_threads(max_threads())
    for (int oc = 0; oc < cout; ++oc) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = bias ? (*bias)[oc] : 0.0;
                for (int ky = 0; ky < kh; ++ky) {
                    int ny = y + pad - ky;
                    if (ny % stride != 0) continue;
                    int iy = ny / stride;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        int nx = x + padx - kx;
                        if (nx % stride != 0) continue;
                        int ix = nx / stride;
                        if (ix < 0 || ix >= w) continue;
                        for (int ic = 0; ic < cin; ++ic) {
                            acc += weights.at4(ic, oc, ky, kx) * input.at3(ic, iy, ix);
                        }
                    }
                }
                out.at3(oc, y, x) = acc;
            }
        }
    }
    return out;
}

Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& weights,
                         int stride, int pad, int in_h, int in_w) {
    int co = weights.dim(0), ci = weights.dim(1), kh = weights.dim(2), kw = weights.dim(3);
    if (grad_out.dim(0) != co) throw std::invalid_argument("conv2d_grad_input: channel mismatch");
    int oh = grad_out.dim(1), ow = grad_out.dim(2);
    Tensor out({ci, in_h, in_w});
#pragma omp parallel for collapse(2) schedule(static) num_threads(max_threads())
    for (int i = 0; i < ci; ++i) {
        for (int y = 0; y < in_h; ++y) {
            for (int x = 0; x < in_w; ++x) {
                double acc = 0.0;
                for (int ky = 0; ky < kh; ++ky) {
                    int ny = y + pad - ky;
                    if (ny % stride != 0) continue;
                    int oy = ny / stride;
                    if (oy < 0 || oy >= oh) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        int nx = x + pad - kx;
                        if (nx % stride != 0) continue;
                        int ox = nx / stride;
                        if (ox < 0 || ox >= ow) continue;
                        for (int o = 0; o < co; ++o) {
                            acc += weights.at4(o, i, ky, kx) * grad_out.at3(o, oy, ox);
                        }
                    }
                }
                out.at3(i, y, x) = acc;
            }
        }
    }
    return out;
}

Tensor conv2d_grad_weights(const Tensor& grad_out, const Tensor& input,
                           int stride, int pad, int kh, int kw) {
    int co = grad_out.dim(0), oh = grad_out.dim(1), ow = grad_out.dim(2);
    int ci = input.dim(0), h = input.dim(1), w = input.dim(2);
    Tensor out({co, ci, kh, kw});
#pragma omp parallel for collapse(2) schedule(static) num_threads(max_threads())
    for (int o = 0; o < co; ++o) {
        for (int i = 0; i < ci; ++i) {
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    double acc = 0.0;
                    for (int oy = 0; oy < oh; ++oy) {
                        int y = oy * stride + ky - pad;
                        if (y < 0 || y >= h) continue;
                        for (int ox = 0; ox < ow; ++ox) {
                            int x = ox * stride + kx - pad;
                            if (x < 0 || x >= w) continue;
                            acc += grad_out.at3(o, oy, ox) * input.at3(i, y, x);
                        }
                    }
                    out.at4(o, i, ky, kx) = acc;
                }
            }
        }
    }
    return out;
}

Tensor conv2d_grad_bias(const Tensor& grad_out) {
    int co = grad_out.dim(0);
    Tensor out({co});
    for (int o = 0; o < co; ++o) {
        double acc = 0.0;
        for (int y = 0; y < grad_out.dim(1); ++y)
            for (int x = 0; x < grad_out.dim(2); ++x) acc += grad_out.at3(o, y, x);
        out[o] = acc;
    }
    return out;
}

Tensor avg_pool2(const Tensor& x) {
    if (x.rank() != 3) throw std::invalid_argument("avg_pool2: expected [c,h,w]");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (h % 2 || w % 2) throw std::invalid_argument("avg_pool2: odd spatial size " + x.shape_str());
    Tensor out({c, h / 2, w / 2});
#pragma omp parallel for collapse(2) schedule(static) num_threads(max_threads())
    for (int i = 0; i < c; ++i) {
        for (int y = 0; y < h / 2; ++y) {
            for (int xo = 0; xo < w / 2; ++xo) {
                out.at3(i, y, xo) = 0.25 * (x.at3(i, 2 * y, 2 * xo) + x.at3(i, 2 * y, 2 * xo + 1) +
                                            x.at3(i, 2 * y + 1, 2 * xo) + x.at3(i, 2 * y + 1, 2 * xo + 1));
            }
        }
    }
    return out;
}

Tensor bilinear_up2(const Tensor& x) {
    if (x.rank() != 3) throw std::invalid_argument("bilinear_up2: expected [c,h,w]");
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    int oh = 2 * h, ow = 2 * w;
    Tensor out({c, oh, ow});
#pragma omp parallel for collapse(2) schedule(static) num_threads(max_threads())
    for (int i = 0; i < c; ++i) {
        for (int y = 0; y < oh; ++y) {
            // half-pixel source coordinate, clamped at the border
            double sy = (y + 0.5) / 2.0 - 0.5;
            int y0 = static_cast<int>(std::floor(sy));
            double fy = sy - y0;
            int y0c = std::min(std::max(y0, 0), h - 1);
            int y1c = std::min(std::max(y0 + 1, 0), h - 1);
            for (int xx = 0; xx < ow; ++xx) {
                double sx = (xx + 0.5) / 2.0 - 0.5;
                int x0 = static_cast<int>(std::floor(sx));
                double fx = sx - x0;
                int x0c = std::min(std::max(x0, 0), w - 1);
                int x1c = std::min(std::max(x0 + 1, 0), w - 1);
                out.at3(i, y, xx) = (1 - fy) * ((1 - fx) * x.at3(i, y0c, x0c) + fx * x.at3(i, y0c, x1c)) +
                                    fy * ((1 - fx) * x.at3(i, y1c, x0c) + fx * x.at3(i, y1c, x1c));
            }
        }
    }
    return out;
}

Tensor silu(const Tensor& x) {
    Tensor out(x.shape);
    for (int64_t i = 0; i < x.size(); ++i) {
        double v = x[i];
        out[i] = v / (1.0 + std::exp(-v));
    }
    return out;
}

Tensor silu_backward(const Tensor& x, const Tensor& grad_out) {
    Tensor out(x.shape);
    for (int64_t i = 0; i < x.size(); ++i) {
        double s = 1.0 / (1.0 + std::exp(-x[i]));
        out[i] = grad_out[i] * s * (1.0 + x[i] * (1.0 - s));
    }
    return out;
}

}  // namespace lss
