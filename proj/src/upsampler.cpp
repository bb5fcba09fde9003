#include "lss/upsampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "lss/kernels.hpp"

namespace lss {

ResBlock::ResBlock(int channels, Rng& rng)
    : a(channels, channels, 3, 1, 1, rng), b(channels, channels, 3, 1, 1, rng) {
    std::fill(b.W.data.begin(), b.W.data.end(), 0.0);
    std::fill(b.b.data.begin(), b.b.data.end(), 0.0);
}

ResnetUpsampler::ResnetUpsampler(int channels, int width, int blocks, Rng& rng)
    : in_conv(channels, width, 3, 1, 1, rng),
      out_conv(width, channels, 3, 1, 1, rng),
      up_conv(width, width, 4, 2, rng),
      channels_(channels),
      width_(width) {
    if (blocks < 1) throw std::invalid_argument("upsampler needs at least one block");
    for (int i = 0; i < blocks; ++i) res_.emplace_back(width, rng);
    std::fill(out_conv.W.data.begin(), out_conv.W.data.end(), 0.0);
    std::fill(out_conv.b.data.begin(), out_conv.b.data.end(), 0.0);
}

Tensor ResnetUpsampler::apply(const Tensor& z) const {
    if (z.rank() != 3 || z.dim(0) != channels_)
        throw std::invalid_argument("upsampler: expected [" + std::to_string(channels_) + ",h,w], got " +
                                    z.shape_str());
    Tensor x = silu(in_conv.forward(z));
    for (const ResBlock& blk : res_) {
        Tensor h = blk.b.forward(silu(blk.a.forward(x)));
        x += h;
    }
    Tensor u = silu(up_conv.forward(x));
    return out_conv.forward(u);
}

std::vector<Tensor*> ResnetUpsampler::params() {
    std::vector<Tensor*> out{&in_conv.W, &in_conv.b};
    for (ResBlock& blk : res_) {
        out.push_back(&blk.a.W);
        out.push_back(&blk.a.b);
        out.push_back(&blk.b.W);
        out.push_back(&blk.b.b);
    }
    out.push_back(&up_conv.W);
    out.push_back(&up_conv.b);
    out.push_back(&out_conv.W);
    out.push_back(&out_conv.b);
    return out;
}

std::vector<Tensor*> ResnetUpsampler::grads() {
    std::vector<Tensor*> out{&in_conv.gW, &in_conv.gb};
    for (ResBlock& blk : res_) {
        out.push_back(&blk.a.gW);
        out.push_back(&blk.a.gb);
        out.push_back(&blk.b.gW);
        out.push_back(&blk.b.gb);
    }
    out.push_back(&up_conv.gW);
    out.push_back(&up_conv.gb);
    out.push_back(&out_conv.gW);
    out.push_back(&out_conv.gb);
    return out;
}

void ResnetUpsampler::zero_grads() {
    for (Tensor* g : grads()) std::fill(g->data.begin(), g->data.end(), 0.0);
}

int64_t ResnetUpsampler::param_count() {
    int64_t n = 0;
    for (Tensor* p : params()) n += p->size();
    return n;
}

double ResnetUpsampler::loss_and_grads(const Tensor& z_low, const Tensor& z_high) {
    Tensor h_in = in_conv.forward(z_low);
    Tensor x = silu(h_in);

    struct BlockTrace {
        Tensor input, ha, sa;
    };
    std::vector<BlockTrace> traces;
    traces.reserve(res_.size());
    for (ResBlock& blk : res_) {
        BlockTrace tr{x, blk.a.forward(x), Tensor({1})};
        tr.sa = silu(tr.ha);
        Tensor h = blk.b.forward(tr.sa);
        x += h;
        traces.push_back(std::move(tr));
    }
    Tensor h_up = up_conv.forward(x);
    Tensor u = silu(h_up);
    Tensor out = out_conv.forward(u);

    double loss = out.mse(z_high);
    Tensor gout(out.shape);
    double scale = 2.0 / static_cast<double>(out.size());
    for (int64_t i = 0; i < out.size(); ++i) gout[i] = scale * (out[i] - z_high[i]);

    Tensor gu = out_conv.backward(u, gout);
    Tensor gx = up_conv.backward(x, silu_backward(h_up, gu));
    for (size_t i = res_.size(); i-- > 0;) {
        ResBlock& blk = res_[i];
        BlockTrace& tr = traces[i];
        Tensor gsa = blk.b.backward(tr.sa, gx);
        Tensor gha = silu_backward(tr.ha, gsa);
        Tensor gskip = blk.a.backward(tr.input, gha);
        gx += gskip;  // identity skip
    }
    in_conv.backward(z_low, silu_backward(h_in, gx));
    return loss;
}

void ResnetUpsampler::save(const std::string& dir) const {
    std::vector<std::pair<std::string, const Tensor*>> tensors{{"in_w", &in_conv.W},
                                                               {"in_b", &in_conv.b}};
    for (size_t i = 0; i < res_.size(); ++i) {
        std::string p = "res" + std::to_string(i);
        tensors.push_back({p + "_aw", &res_[i].a.W});
        tensors.push_back({p + "_ab", &res_[i].a.b});
        tensors.push_back({p + "_bw", &res_[i].b.W});
        tensors.push_back({p + "_bb", &res_[i].b.b});
    }
    tensors.push_back({"up_w", &up_conv.W});
    tensors.push_back({"up_b", &up_conv.b});
    tensors.push_back({"out_w", &out_conv.W});
    tensors.push_back({"out_b", &out_conv.b});
    save_checkpoint(dir, tensors,
                    {{"kind", "upsampler"},
                     {"channels", std::to_string(channels_)},
                     {"width", std::to_string(width_)},
                     {"blocks", std::to_string(res_.size())},
                     {"arch", "in conv3x3, residual blocks (conv-silu-conv, zero-init"
                              " second conv), transposed conv k4 s2, zero-init out conv"}});
}

ResnetUpsampler ResnetUpsampler::load(const std::string& dir) {
    Checkpoint ck = load_checkpoint(dir);
    if (ck.meta_or("kind", "") != "upsampler")
        throw std::invalid_argument("load upsampler: " + dir + " is a " + ck.meta_or("kind", "?") +
                                    " checkpoint");
    Rng rng(0);
    ResnetUpsampler model(std::stoi(ck.meta_or("channels", "4")), std::stoi(ck.meta_or("width", "32")),
                          std::stoi(ck.meta_or("blocks", "3")), rng);
    model.in_conv.W = ck.get("in_w");
    model.in_conv.b = ck.get("in_b");
    for (size_t i = 0; i < model.res_.size(); ++i) {
        std::string p = "res" + std::to_string(i);
        model.res_[i].a.W = ck.get(p + "_aw");
        model.res_[i].a.b = ck.get(p + "_ab");
        model.res_[i].b.W = ck.get(p + "_bw");
        model.res_[i].b.b = ck.get(p + "_bb");
    }
    model.up_conv.W = ck.get("up_w");
    model.up_conv.b = ck.get("up_b");
    model.out_conv.W = ck.get("out_w");
    model.out_conv.b = ck.get("out_b");
    return model;
}

Tensor bilinear_latent(const Tensor& z) { return bilinear_up2(z); }

Tensor pixel_roundtrip_upscale(const Codec& codec, const Tensor& z) {
    return codec.encode(bilinear_up2(codec.decode(z)));
}

UpsamplerReport train_upsampler(ResnetUpsampler& model, const Codec& codec, const GrfSpec& spec,
                                int pairs, int epochs, double lr, Rng& rng) {
    if (pairs < 10) throw std::invalid_argument("train_upsampler: need at least 10 pairs");
    if (spec.size % (2 * codec.spatial_factor()) != 0)
        throw std::invalid_argument("train_upsampler: field size not divisible for codec");

    std::vector<Tensor> lows, highs;
    lows.reserve(pairs);
    highs.reserve(pairs);
    for (int i = 0; i < pairs; ++i) {
        Tensor x = grf_sample(spec, rng);
        lows.push_back(codec.encode(avg_pool2(x)));
        highs.push_back(codec.encode(x));
    }

    size_t train_n = static_cast<size_t>(pairs) - std::max<size_t>(1, static_cast<size_t>(pairs) / 10);

    UpsamplerReport report;
    report.param_count = model.param_count();
    report.holdout_pairs = static_cast<int>(lows.size() - train_n);

    Adam opt(lr);
    std::vector<size_t> order(train_n);
    for (size_t i = 0; i < train_n; ++i) order[i] = i;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (size_t i = train_n; i > 1; --i) std::swap(order[i - 1], order[rng.next_u64() % i]);
        double total = 0.0;
        for (size_t i : order) {
            model.zero_grads();
            double loss = model.loss_and_grads(lows[i], highs[i]);
            if (!std::isfinite(loss)) throw std::runtime_error("train_upsampler: non-finite loss");
            total += loss;
            opt.step(model.params(), model.grads());
        }
        report.epoch_loss.push_back(total / static_cast<double>(train_n));
    }

    std::unique_ptr<MmseUpsampler> oracle;
    if (codec.spatial_factor() == 1 && spec.size <= 64) {
        oracle = std::make_unique<MmseUpsampler>(spec);
        report.oracle_mse_expected = oracle->oracle_mse();
        report.oracle_mse = 0.0;
    }
    double mse_model = 0.0, mse_bilinear = 0.0, peak = 0.0;
    int wins = 0;
    std::vector<Tensor> out_model, out_bilinear, out_oracle, out_target;
    for (size_t i = train_n; i < lows.size(); ++i) {
        out_model.push_back(model.apply(lows[i]));
        out_bilinear.push_back(bilinear_latent(lows[i]));
        out_target.push_back(highs[i]);
        double m = out_model.back().mse(highs[i]);
        double bl = out_bilinear.back().mse(highs[i]);
        mse_model += m;
        mse_bilinear += bl;
        if (m < bl) ++wins;
        if (oracle) {
            out_oracle.push_back(oracle->apply(lows[i]));
            report.oracle_mse += out_oracle.back().mse(highs[i]);
        }
        for (int64_t j = 0; j < highs[i].size(); ++j) peak = std::max(peak, std::abs(highs[i][j]));
    }
    double held = static_cast<double>(lows.size() - train_n);
    report.holdout_mse = mse_model / held;
    report.bilinear_mse = mse_bilinear / held;
    report.win_rate_vs_bilinear = wins / held;
    if (oracle) report.oracle_mse /= held;

    auto psnr = [&](double mse) { return mse > 0.0 ? 10.0 * std::log10(peak * peak / mse) : 0.0; };
    auto add_method = [&](const std::string& name, double mse, const std::vector<Tensor>& batch) {
        report.methods.push_back({name, mse, psnr(mse), radial_power_spectrum(batch).power});
    };
    add_method("trained", report.holdout_mse, out_model);
    add_method("bilinear", report.bilinear_mse, out_bilinear);
    if (oracle) add_method("oracle", report.oracle_mse, out_oracle);
    add_method("target", 0.0, out_target);
    return report;
}

void write_upsampler_report_csv(const std::string& path, const UpsamplerReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "method,mse,psnr";
    size_t bands = report.methods.empty() ? 0 : report.methods.front().bands.size();
    for (size_t b = 0; b < bands; ++b) out << ",band" << b;
    out << "\n";
    for (const UpsamplerMethodEval& m : report.methods) {
        out << m.name << "," << m.mse << "," << m.psnr;
        for (double p : m.bands) out << "," << p;
        out << "\n";
    }
    out << "\nmetric,value\n";
    for (size_t i = 0; i < report.epoch_loss.size(); ++i)
        out << "epoch_" << i << "_loss," << report.epoch_loss[i] << "\n";
    if (report.oracle_mse_expected >= 0.0)
        out << "oracle_mse_expected," << report.oracle_mse_expected << "\n";
    out << "win_rate_vs_bilinear," << report.win_rate_vs_bilinear << "\n";
    out << "param_count," << report.param_count << "\n";
    out << "holdout_pairs," << report.holdout_pairs << "\n";
}

}  // namespace lss
