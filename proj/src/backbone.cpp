#include "lss/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "lss/kernels.hpp"

namespace lss {

const char* pred_mode_name(PredMode mode) {
    return mode == PredMode::Velocity ? "velocity" : "epsilon";
}

PredMode pred_mode_from(const std::string& name) {
    if (name == "velocity" || name == "fm") return PredMode::Velocity;
    if (name == "epsilon" || name == "dm") return PredMode::Epsilon;
    throw std::invalid_argument("unknown prediction mode: " + name);
}

namespace {
void check_t(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in [0,1], got " + std::to_string(t));
}
}  // namespace

Tensor Backbone::predict_velocity(const Tensor& z_t, double t) const {
    check_t(t);
    if (mode() == PredMode::Velocity) return predict(z_t, t);
    Tensor eps = predict(z_t, t);
    if (t >= 1.0) return eps;  // x0 pinned to the zero data mean
    Tensor v(z_t.shape);
    for (int64_t i = 0; i < v.size(); ++i) {
        double x0 = (z_t[i] - t * eps[i]) / (1.0 - t);
        v[i] = eps[i] - x0;
    }
    return v;
}

Tensor Backbone::predict_eps(const Tensor& z_t, double t) const {
    check_t(t);
    if (mode() == PredMode::Epsilon) return predict(z_t, t);
    Tensor v = predict(z_t, t);
    Tensor eps(z_t.shape);
    for (int64_t i = 0; i < eps.size(); ++i) eps[i] = z_t[i] + (1.0 - t) * v[i];
    return eps;
}

Tensor Backbone::predict_x0(const Tensor& z_t, double t) const {
    check_t(t);
    if (mode() == PredMode::Velocity) {
        Tensor v = predict(z_t, t);
        Tensor x0(z_t.shape);
        for (int64_t i = 0; i < x0.size(); ++i) x0[i] = z_t[i] - t * v[i];
        return x0;
    }
    if (t >= 1.0) return Tensor::zeros(z_t.shape);
    Tensor eps = predict(z_t, t);
    Tensor x0(z_t.shape);
    for (int64_t i = 0; i < x0.size(); ++i) x0[i] = (z_t[i] - t * eps[i]) / (1.0 - t);
    return x0;
}

void AnalyticBackbone::register_spec(const GrfSpec& spec) { specs_[spec.size] = spec; }

const GrfSpec& AnalyticBackbone::spec_for(int resolution) const {
    auto it = specs_.find(resolution);
    if (it == specs_.end())
        throw std::invalid_argument("analytic backbone: no spectrum registered for resolution " +
                                    std::to_string(resolution));
    return it->second;
}

Tensor AnalyticBackbone::predict(const Tensor& z_t, double t) const {
    check_t(t);
    if (z_t.rank() != 3 || z_t.dim(1) != z_t.dim(2))
        throw std::invalid_argument("analytic backbone: expected square [c,n,n], got " + z_t.shape_str());
    const GrfSpec& spec = spec_for(z_t.dim(1));
    return mode_ == PredMode::Velocity ? analytic_velocity(z_t, t, spec) : analytic_eps(z_t, t, spec);
}

LearnedBackbone::LearnedBackbone(PredMode mode, int channels, Rng& rng)
    : conv1(channels, kWidth, 3, 1, 1, rng),
      conv2(kWidth, kWidth, 3, 1, 1, rng),
      conv3(kWidth, kWidth, 3, 1, 1, rng),
      conv4(kWidth, channels, 3, 1, 1, rng),
      time_lin(kWidth, kWidth, rng),
      mode_(mode),
      channels_(channels) {
    if (channels < 1) throw std::invalid_argument("backbone channels must be positive");
    std::fill(conv4.W.data.begin(), conv4.W.data.end(), 0.0);
    std::fill(conv4.b.data.begin(), conv4.b.data.end(), 0.0);
}

Tensor LearnedBackbone::time_embedding(double t) {
    constexpr int half = kWidth / 2;
    Tensor e({kWidth});
    for (int i = 0; i < half; ++i) {
        double freq = std::pow(1000.0, -static_cast<double>(i) / (half - 1));
        e[i] = std::sin(t * freq);
        e[half + i] = std::cos(t * freq);
    }
    return e;
}

Tensor LearnedBackbone::predict(const Tensor& z_t, double t) const {
    check_t(t);
    if (z_t.rank() != 3 || z_t.dim(0) != channels_)
        throw std::invalid_argument("backbone: expected [" + std::to_string(channels_) + ",h,w], got " +
                                    z_t.shape_str());
    Tensor h1 = conv1.forward(z_t);
    Tensor u = time_lin.forward(time_embedding(t));
    int64_t plane = static_cast<int64_t>(h1.dim(1)) * h1.dim(2);
    for (int c = 0; c < kWidth; ++c)
        for (int64_t i = 0; i < plane; ++i) h1[c * plane + i] += u[c];
    Tensor a1 = silu(h1);
    Tensor a2 = silu(conv2.forward(a1));
    Tensor a3 = silu(conv3.forward(a2));
    return conv4.forward(a3);
}

std::vector<Tensor*> LearnedBackbone::params() {
    return {&conv1.W, &conv1.b, &conv2.W,    &conv2.b,    &conv3.W,    &conv3.b,
            &conv4.W, &conv4.b, &time_lin.W, &time_lin.b};
}

std::vector<Tensor*> LearnedBackbone::grads() {
    return {&conv1.gW, &conv1.gb, &conv2.gW,    &conv2.gb,    &conv3.gW,    &conv3.gb,
            &conv4.gW, &conv4.gb, &time_lin.gW, &time_lin.gb};
}

void LearnedBackbone::zero_grads() {
    conv1.zero_grads();
    conv2.zero_grads();
    conv3.zero_grads();
    conv4.zero_grads();
    time_lin.zero_grads();
}

int64_t LearnedBackbone::param_count() {
    int64_t n = 0;
    for (Tensor* p : params()) n += p->size();
    return n;
}

double LearnedBackbone::loss_and_grads(const Tensor& z_t, double t, const Tensor& target) {
    check_t(t);
    Tensor h1 = conv1.forward(z_t);
    Tensor emb = time_embedding(t);
    Tensor u = time_lin.forward(emb);
    int64_t plane = static_cast<int64_t>(h1.dim(1)) * h1.dim(2);
    for (int c = 0; c < kWidth; ++c)
        for (int64_t i = 0; i < plane; ++i) h1[c * plane + i] += u[c];
    Tensor a1 = silu(h1);
    Tensor h2 = conv2.forward(a1);
    Tensor a2 = silu(h2);
    Tensor h3 = conv3.forward(a2);
    Tensor a3 = silu(h3);
    Tensor out = conv4.forward(a3);

    double loss = out.mse(target);
    Tensor gout(out.shape);
    double scale = 2.0 / static_cast<double>(out.size());
    for (int64_t i = 0; i < out.size(); ++i) gout[i] = scale * (out[i] - target[i]);

    Tensor ga3 = conv4.backward(a3, gout);
    Tensor gh3 = silu_backward(h3, ga3);
    Tensor ga2 = conv3.backward(a2, gh3);
    Tensor gh2 = silu_backward(h2, ga2);
    Tensor ga1 = conv2.backward(a1, gh2);
    Tensor gh1 = silu_backward(h1, ga1);
    Tensor gu({kWidth});
    for (int c = 0; c < kWidth; ++c) {
        double acc = 0.0;
        for (int64_t i = 0; i < plane; ++i) acc += gh1[c * plane + i];
        gu[c] = acc;
    }
    time_lin.backward(emb, gu);
    conv1.backward(z_t, gh1);
    return loss;
}

void LearnedBackbone::save(const std::string& dir) const {
    save_checkpoint(dir,
                    {{"conv1_w", &conv1.W},
                     {"conv1_b", &conv1.b},
                     {"conv2_w", &conv2.W},
                     {"conv2_b", &conv2.b},
                     {"conv3_w", &conv3.W},
                     {"conv3_b", &conv3.b},
                     {"conv4_w", &conv4.W},
                     {"conv4_b", &conv4.b},
                     {"time_w", &time_lin.W},
                     {"time_b", &time_lin.b}},
                    {{"kind", "backbone"},
                     {"mode", pred_mode_name(mode_)},
                     {"channels", std::to_string(channels_)},
                     {"width", std::to_string(kWidth)},
                     {"arch", "conv3x3 x4, width 32, sinusoidal time embedding after conv1"}});
}

LearnedBackbone LearnedBackbone::load(const std::string& dir) {
    Checkpoint ck = load_checkpoint(dir);
    if (ck.meta_or("kind", "") != "backbone")
        throw std::invalid_argument("load backbone: " + dir + " is a " + ck.meta_or("kind", "?") +
                                    " checkpoint");
    Rng rng(0);
    LearnedBackbone model(pred_mode_from(ck.meta_or("mode", "velocity")),
                          std::stoi(ck.meta_or("channels", "1")), rng);
    model.conv1.W = ck.get("conv1_w");
    model.conv1.b = ck.get("conv1_b");
    model.conv2.W = ck.get("conv2_w");
    model.conv2.b = ck.get("conv2_b");
    model.conv3.W = ck.get("conv3_w");
    model.conv3.b = ck.get("conv3_b");
    model.conv4.W = ck.get("conv4_w");
    model.conv4.b = ck.get("conv4_b");
    model.time_lin.W = ck.get("time_w");
    model.time_lin.b = ck.get("time_b");
    return model;
}

namespace {
Tensor training_target(PredMode mode, const Tensor& z0, const Tensor& eps) {
    if (mode == PredMode::Epsilon) return eps;
    Tensor v(z0.shape);
    for (int64_t i = 0; i < v.size(); ++i) v[i] = eps[i] - z0[i];
    return v;
}
}  // namespace

TrainReport train_backbone(LearnedBackbone& model, const std::vector<Tensor>& latents, int epochs,
                           double lr, Rng& rng, const GrfSpec* oracle_spec) {
    if (latents.size() < 2) throw std::invalid_argument("train_backbone: need at least 2 latents");
    size_t train_n = latents.size() - std::max<size_t>(1, latents.size() / 10);

    // fixed probe states on the held-out split, stable across epochs
    struct Probe {
        Tensor z_t, target;
        double t;
    };
    std::vector<Probe> probes;
    Rng probe_rng = rng.fork(0x9e3779b97f4a7c15ULL);
    for (size_t i = train_n; i < latents.size(); ++i) {
        const Tensor& z0 = latents[i];
        double t = probe_rng.uniform_in(0.01, 0.99);
        Tensor eps = probe_rng.normal_tensor(z0.shape);
        Tensor z_t(z0.shape);
        for (int64_t j = 0; j < z0.size(); ++j) z_t[j] = (1.0 - t) * z0[j] + t * eps[j];
        probes.push_back({std::move(z_t), training_target(model.mode(), z0, eps), t});
    }

    auto probe_loss = [&](const std::function<Tensor(const Probe&)>& pred) {
        double total = 0.0;
        for (const Probe& p : probes) total += pred(p).mse(p.target);
        return total / static_cast<double>(probes.size());
    };

    TrainReport report;
    report.untrained_loss = probe_loss([&](const Probe& p) { return model.predict(p.z_t, p.t); });
    double power = 0.0;
    for (const Probe& p : probes) power += p.target.dot(p.target) / static_cast<double>(p.target.size());
    report.target_power = power / static_cast<double>(probes.size());

    Adam opt(lr);
    std::vector<size_t> order(train_n);
    for (size_t i = 0; i < train_n; ++i) order[i] = i;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (size_t i = train_n; i > 1; --i) std::swap(order[i - 1], order[rng.next_u64() % i]);
        double total = 0.0;
        for (size_t i : order) {
            const Tensor& z0 = latents[i];
            double t = rng.uniform_in(0.01, 0.99);
            Tensor eps = rng.normal_tensor(z0.shape);
            Tensor z_t(z0.shape);
            for (int64_t j = 0; j < z0.size(); ++j) z_t[j] = (1.0 - t) * z0[j] + t * eps[j];
            model.zero_grads();
            double loss = model.loss_and_grads(z_t, t, training_target(model.mode(), z0, eps));
            if (!std::isfinite(loss)) throw std::runtime_error("train_backbone: non-finite loss");
            total += loss;
            opt.step(model.params(), model.grads());
        }
        report.epoch_loss.push_back(total / static_cast<double>(train_n));
    }

    report.holdout_loss = probe_loss([&](const Probe& p) { return model.predict(p.z_t, p.t); });
    if (oracle_spec) {
        AnalyticBackbone oracle(model.mode());
        oracle.register_spec(*oracle_spec);
        report.oracle_loss = probe_loss([&](const Probe& p) { return oracle.predict(p.z_t, p.t); });
        double gap = 0.0, opower = 0.0;
        for (const Probe& p : probes) {
            Tensor o = oracle.predict(p.z_t, p.t);
            gap += model.predict(p.z_t, p.t).mse(o);
            opower += o.dot(o) / static_cast<double>(o.size());
        }
        report.oracle_gap_mse = gap / static_cast<double>(probes.size());
        report.oracle_pred_power = opower / static_cast<double>(probes.size());
    }
    return report;
}

void write_train_report_csv(const std::string& path, const TrainReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "metric,value\n";
    for (size_t i = 0; i < report.epoch_loss.size(); ++i)
        out << "epoch_" << i << "_loss," << report.epoch_loss[i] << "\n";
    out << "untrained_loss," << report.untrained_loss << "\n";
    out << "holdout_loss," << report.holdout_loss << "\n";
    out << "target_power," << report.target_power << "\n";
    if (report.oracle_loss >= 0.0) {
        out << "oracle_loss," << report.oracle_loss << "\n";
        out << "oracle_gap_mse," << report.oracle_gap_mse << "\n";
        out << "oracle_pred_power," << report.oracle_pred_power << "\n";
    }
}

}  // namespace lss
