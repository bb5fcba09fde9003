#pragma once

#include "lss/tensor.hpp"

namespace lss {

// Cross-correlation conv: input [ci,h,w], weights [co,ci,kh,kw], optional
// bias [co]. Output spatial size is (h + 2*pad - kh)/stride + 1 (floor).
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor* bias,
              int stride, int pad);

// Exact adjoint of conv2d under the implicit padding ceil((k-stride)/2),
// chosen so the output is always exactly [co', stride*h, stride*w]. Weight
// layout matches the conv it is adjoint to: [cin, cout, kh, kw] maps an
// input with cin channels to cout channels.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weights,
                        const Tensor* bias, int stride);
int conv_transpose_pad(int k, int stride);

// Gradients of conv2d. grad_out has the forward output's shape.
Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& weights,
                         int stride, int pad, int in_h, int in_w);
Tensor conv2d_grad_weights(const Tensor& grad_out, const Tensor& input,
                           int stride, int pad, int kh, int kw);
Tensor conv2d_grad_bias(const Tensor& grad_out);

// 2x2 average pooling, the canonical downscale. Requires even h, w.
Tensor avg_pool2(const Tensor& x);

// Channel-wise bilinear x2 upsampling (half-pixel centers, edges clamped).
// Exact on linear ramps away from the clamped border.
Tensor bilinear_up2(const Tensor& x);

Tensor silu(const Tensor& x);
Tensor silu_backward(const Tensor& x, const Tensor& grad_out);

// Number of threads kernels may use; reads LSS_THREADS once (0 = default).
int max_threads();

}  // namespace lss
