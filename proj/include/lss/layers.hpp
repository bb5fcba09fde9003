#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lss/kernels.hpp"
#include "lss/rng.hpp"
#include "lss/tensor.hpp"

namespace lss {

// Parameterized building blocks with hand-written backward passes. backward
// accumulates parameter gradients into the layer's grad buffers and returns
// the gradient with respect to the input.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x) const = 0;
    virtual Tensor backward(const Tensor& x, const Tensor& grad_out) = 0;
    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    virtual std::string name() const = 0;
    void zero_grads() {
        for (Tensor* g : grads()) std::fill(g->data.begin(), g->data.end(), 0.0);
    }
};

class Conv2dLayer : public Layer {
public:
    Conv2dLayer(int in_ch, int out_ch, int k, int stride, int pad, Rng& rng);

    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& x, const Tensor& grad_out) override;
    std::vector<Tensor*> params() override { return {&W, &b}; }
    std::vector<Tensor*> grads() override { return {&gW, &gb}; }
    std::string name() const override { return "conv2d"; }

    Tensor W, b, gW, gb;
    int stride, pad;
};

class ConvTranspose2dLayer : public Layer {
public:
    ConvTranspose2dLayer(int in_ch, int out_ch, int k, int stride, Rng& rng);

    Tensor forward(const Tensor& x) const override;
    Tensor backward(const Tensor& x, const Tensor& grad_out) override;
    std::vector<Tensor*> params() override { return {&W, &b}; }
    std::vector<Tensor*> grads() override { return {&gW, &gb}; }
    std::string name() const override { return "conv_transpose2d"; }

    Tensor W, b, gW, gb;  // W layout [in_ch, out_ch, k, k]
    int stride;
};

class LinearLayer : public Layer {
public:
    LinearLayer(int in_dim, int out_dim, Rng& rng);

    Tensor forward(const Tensor& x) const override;  // x is [in_dim]
    Tensor backward(const Tensor& x, const Tensor& grad_out) override;
    std::vector<Tensor*> params() override { return {&W, &b}; }
    std::vector<Tensor*> grads() override { return {&gW, &gb}; }
    std::string name() const override { return "linear"; }

    Tensor W, b, gW, gb;
};

class SiluLayer : public Layer {
public:
    Tensor forward(const Tensor& x) const override { return silu(x); }
    Tensor backward(const Tensor& x, const Tensor& grad_out) override {
        return silu_backward(x, grad_out);
    }
    std::string name() const override { return "silu"; }
};

class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // In-place update; params and grads must line up call after call.
    void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads);

private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Central-difference verification of a layer's backward pass. Uses the
// scalar probe loss L = <forward(x), R> with a fixed random R, step 1e-5,
// and checks every parameter plus every input element. The error is
// relative where gradients are O(1) and absolute below 1e-6 so genuinely
// zero gradients do not divide by zero.
struct GradCheckReport {
    double max_error = 0.0;
    int64_t checked = 0;
    bool pass(double tol) const { return max_error < tol; }
};
GradCheckReport grad_check(Layer& layer, const Tensor& input, Rng& rng, double step = 1e-5);

// Same probe applied to an arbitrary differentiable map; used to verify
// whole models end to end. loss_grad(params...) must fill the grad buffers.
GradCheckReport grad_check_fn(const std::vector<Tensor*>& params,
                              const std::vector<Tensor*>& grads,
                              const std::function<double()>& loss,
                              const std::function<void()>& compute_grads,
                              double step = 1e-5, int64_t max_checks = 0,
                              Rng* pick = nullptr);

// Checkpoints: a directory with manifest.txt plus one LST1 file per tensor.
void save_checkpoint(const std::string& dir,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors,
                     const std::map<std::string, std::string>& meta);
struct Checkpoint {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> meta;
    const Tensor& get(const std::string& name) const;
    std::string meta_or(const std::string& key, const std::string& fallback) const;
};
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace lss
