#include "lss/layers.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "lss/io.hpp"

namespace lss {

namespace {
void he_fill(Tensor& t, int fan_in, Rng& rng) {
    double scale = std::sqrt(2.0 / fan_in);
    for (double& v : t.data) v = rng.normal() * scale;
}
}  // namespace

Conv2dLayer::Conv2dLayer(int in_ch, int out_ch, int k, int stride_, int pad_, Rng& rng)
    : W({out_ch, in_ch, k, k}), b({out_ch}), gW(W.shape), gb(b.shape), stride(stride_), pad(pad_) {
    he_fill(W, in_ch * k * k, rng);
}

Tensor Conv2dLayer::forward(const Tensor& x) const { return conv2d(x, W, &b, stride, pad); }

Tensor Conv2dLayer::backward(const Tensor& x, const Tensor& grad_out) {
    gW += conv2d_grad_weights(grad_out, x, stride, pad, W.dim(2), W.dim(3));
    gb += conv2d_grad_bias(grad_out);
    return conv2d_grad_input(grad_out, W, stride, pad, x.dim(1), x.dim(2));
}

ConvTranspose2dLayer::ConvTranspose2dLayer(int in_ch, int out_ch, int k, int stride_, Rng& rng)
    : W({in_ch, out_ch, k, k}), b({out_ch}), gW(W.shape), gb(b.shape), stride(stride_) {
    if (stride == 1 && k % 2 == 0)
        throw std::invalid_argument("conv_transpose layer: stride 1 needs an odd kernel");
    he_fill(W, in_ch * k * k, rng);
}

Tensor ConvTranspose2dLayer::forward(const Tensor& x) const {
    return conv_transpose2d(x, W, &b, stride);
}

// The transpose layer is the adjoint of a conv with the same weight memory,
// so its input gradient is that conv run forward, and its weight gradient
// is the conv's weight gradient with the roles of input and grad swapped.
Tensor ConvTranspose2dLayer::backward(const Tensor& x, const Tensor& grad_out) {
    int k = W.dim(2);
    int pad = conv_transpose_pad(k, stride);
    gW += conv2d_grad_weights(x, grad_out, stride, pad, k, k);
    gb += conv2d_grad_bias(grad_out);
    return conv2d(grad_out, W, nullptr, stride, pad);
}

LinearLayer::LinearLayer(int in_dim, int out_dim, Rng& rng)
    : W({out_dim, in_dim}), b({out_dim}), gW(W.shape), gb(b.shape) {
    he_fill(W, in_dim, rng);
}

Tensor LinearLayer::forward(const Tensor& x) const {
    if (x.size() != W.dim(1)) throw std::invalid_argument("linear: input size mismatch");
    Tensor y({W.dim(0)});
    for (int o = 0; o < W.dim(0); ++o) {
        double acc = b[o];
        for (int i = 0; i < W.dim(1); ++i) acc += W[static_cast<int64_t>(o) * W.dim(1) + i] * x[i];
        y[o] = acc;
    }
    return y;
}

Tensor LinearLayer::backward(const Tensor& x, const Tensor& grad_out) {
    Tensor gx(x.shape);
    for (int o = 0; o < W.dim(0); ++o) {
        double g = grad_out[o];
        gb[o] += g;
        for (int i = 0; i < W.dim(1); ++i) {
            gW[static_cast<int64_t>(o) * W.dim(1) + i] += g * x[i];
            gx[i] += g * W[static_cast<int64_t>(o) * W.dim(1) + i];
        }
    }
    return gx;
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("Adam: param/grad count mismatch");
    if (m_.empty()) {
        for (Tensor* p : params) {
            m_.emplace_back(p->data.size(), 0.0);
            v_.emplace_back(p->data.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw std::invalid_argument("Adam: param set changed");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = *grads[k];
        if (p.data.size() != m_[k].size()) throw std::invalid_argument("Adam: param shape changed");
        for (size_t i = 0; i < p.data.size(); ++i) {
            double gi = g.data[i];
            if (!std::isfinite(gi)) throw std::runtime_error("Adam: non-finite gradient");
            m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * gi;
            v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * gi * gi;
            p.data[i] -= lr_ * (m_[k][i] / bc1) / (std::sqrt(v_[k][i] / bc2) + eps_);
        }
    }
}

namespace {
double rel_or_abs_error(double a, double n) {
    double denom = std::max(std::abs(a), std::abs(n));
    double diff = std::abs(a - n);
    return denom < 1e-6 ? diff : diff / denom;
}
}  // namespace

GradCheckReport grad_check(Layer& layer, const Tensor& input, Rng& rng, double step) {
    Tensor probe = rng.normal_tensor(layer.forward(input).shape);
    layer.zero_grads();
    Tensor x = input;
    Tensor grad_in = layer.backward(x, probe);
    auto loss = [&]() { return layer.forward(x).dot(probe); };

    GradCheckReport rep;
    auto check_buffer = [&](Tensor& values, const Tensor& analytic) {
        for (size_t i = 0; i < values.data.size(); ++i) {
            double keep = values.data[i];
            values.data[i] = keep + step;
            double lp = loss();
            values.data[i] = keep - step;
            double lm = loss();
            values.data[i] = keep;
            double numeric = (lp - lm) / (2.0 * step);
            rep.max_error = std::max(rep.max_error, rel_or_abs_error(analytic.data[i], numeric));
            ++rep.checked;
        }
    };
    std::vector<Tensor*> ps = layer.params();
    std::vector<Tensor*> gs = layer.grads();
    for (size_t k = 0; k < ps.size(); ++k) check_buffer(*ps[k], *gs[k]);
    check_buffer(x, grad_in);
    return rep;
}

GradCheckReport grad_check_fn(const std::vector<Tensor*>& params,
                              const std::vector<Tensor*>& grads,
                              const std::function<double()>& loss,
                              const std::function<void()>& compute_grads,
                              double step, int64_t max_checks, Rng* pick) {
    compute_grads();
    std::vector<Tensor> analytic;
    analytic.reserve(grads.size());
    for (Tensor* g : grads) analytic.push_back(*g);

    int64_t total = 0;
    for (Tensor* p : params) total += p->size();
    GradCheckReport rep;
    for (size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        for (int64_t i = 0; i < p.size(); ++i) {
            // subsample when the model is too big to probe exhaustively
            if (max_checks > 0 && pick &&
                pick->uniform() > static_cast<double>(max_checks) / static_cast<double>(total)) {
                continue;
            }
            double keep = p[i];
            p[i] = keep + step;
            double lp = loss();
            p[i] = keep - step;
            double lm = loss();
            p[i] = keep;
            double numeric = (lp - lm) / (2.0 * step);
            rep.max_error = std::max(rep.max_error, rel_or_abs_error(analytic[k][i], numeric));
            ++rep.checked;
        }
    }
    return rep;
}

void save_checkpoint(const std::string& dir,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors,
                     const std::map<std::string, std::string>& meta) {
    std::filesystem::create_directories(dir);
    std::ostringstream manifest;
    for (const auto& [key, value] : meta) manifest << "meta " << key << " " << value << "\n";
    for (const auto& [tname, t] : tensors) {
        std::string fname = tname + ".lst1";
        save_tensor(dir + "/" + fname, *t);
        manifest << "tensor " << tname;
        for (int i = 0; i < t->rank(); ++i) manifest << " " << t->dim(i);
        manifest << "\n";
    }
    write_text_file(dir + "/manifest.txt", manifest.str());
}

Checkpoint load_checkpoint(const std::string& dir) {
    Checkpoint ck;
    std::istringstream manifest(read_text_file(dir + "/manifest.txt"));
    std::string line;
    while (std::getline(manifest, line)) {
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "meta") {
            std::string key, value;
            ls >> key;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            ck.meta[key] = value;
        } else if (kind == "tensor") {
            std::string tname;
            ls >> tname;
            ck.tensors[tname] = load_tensor(dir + "/" + tname + ".lst1");
        } else if (!kind.empty()) {
            throw std::runtime_error("load_checkpoint: bad manifest line: " + line);
        }
    }
    return ck;
}

const Tensor& Checkpoint::get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("checkpoint: missing tensor " + name);
    return it->second;
}

std::string Checkpoint::meta_or(const std::string& key, const std::string& fallback) const {
    auto it = meta.find(key);
    return it == meta.end() ? fallback : it->second;
}

}  // namespace lss
