#include "lss/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lss/kernels.hpp"

namespace lss {

namespace {
void check_image(const Tensor& x, int factor, const char* who) {
    if (x.rank() != 3) throw std::invalid_argument(std::string(who) + ": expected [c,h,w]");
    if (x.dim(1) % factor != 0 || x.dim(2) % factor != 0)
        throw std::invalid_argument(std::string(who) + ": dims must be divisible by " +
                                    std::to_string(factor) + ", got " + x.shape_str());
}
}  // namespace

Tensor IdentityCodec::encode(const Tensor& x) const {
    check_image(x, 1, "identity encode");
    return x;
}

Tensor IdentityCodec::decode(const Tensor& z) const {
    check_image(z, 1, "identity decode");
    return z;
}

Autoencoder::Autoencoder(Rng& rng)
    : enc1(1, 8, 3, 2, 1, rng),
      enc2(8, 4, 3, 2, 1, rng),
      dec1(4, 8, 3, 2, rng),
      dec2(8, 1, 3, 2, rng) {}

Tensor Autoencoder::encode(const Tensor& x) const {
    check_image(x, 4, "encode");
    if (x.dim(0) != 1) throw std::invalid_argument("encode: expected 1 channel, got " + x.shape_str());
    return enc2.forward(silu(enc1.forward(x)));
}

Tensor Autoencoder::decode(const Tensor& z) const {
    if (z.rank() != 3 || z.dim(0) != 4)
        throw std::invalid_argument("decode: expected [4,h,w], got " + z.shape_str());
    return dec2.forward(silu(dec1.forward(z)));
}

std::vector<Tensor*> Autoencoder::params() {
    return {&enc1.W, &enc1.b, &enc2.W, &enc2.b, &dec1.W, &dec1.b, &dec2.W, &dec2.b};
}

std::vector<Tensor*> Autoencoder::grads() {
    return {&enc1.gW, &enc1.gb, &enc2.gW, &enc2.gb, &dec1.gW, &dec1.gb, &dec2.gW, &dec2.gb};
}

void Autoencoder::zero_grads() {
    enc1.zero_grads();
    enc2.zero_grads();
    dec1.zero_grads();
    dec2.zero_grads();
}

double Autoencoder::recon_loss_and_grads(const Tensor& x) {
    check_image(x, 4, "recon");
    Tensor h1 = enc1.forward(x);
    Tensor a1 = silu(h1);
    Tensor z = enc2.forward(a1);
    Tensor h2 = dec1.forward(z);
    Tensor a2 = silu(h2);
    Tensor y = dec2.forward(a2);

    double loss = y.mse(x);
    Tensor gy(y.shape);
    double scale = 2.0 / static_cast<double>(y.size());
    for (int64_t i = 0; i < y.size(); ++i) gy[i] = scale * (y[i] - x[i]);

    Tensor ga2 = dec2.backward(a2, gy);
    Tensor gh2 = silu_backward(h2, ga2);
    Tensor gz = dec1.backward(z, gh2);
    Tensor ga1 = enc2.backward(a1, gz);
    Tensor gh1 = silu_backward(h1, ga1);
    enc1.backward(x, gh1);
    return loss;
}

void Autoencoder::save(const std::string& dir) const {
    save_checkpoint(dir,
                    {{"enc1_w", &enc1.W},
                     {"enc1_b", &enc1.b},
                     {"enc2_w", &enc2.W},
                     {"enc2_b", &enc2.b},
                     {"dec1_w", &dec1.W},
                     {"dec1_b", &dec1.b},
                     {"dec2_w", &dec2.W},
                     {"dec2_b", &dec2.b}},
                    {{"kind", "autoencoder"},
                     {"arch", "conv 1-8-4 stride2 x2, silu, mirrored transposed convs"},
                     {"latent_channels", "4"},
                     {"spatial_factor", "4"}});
}

Autoencoder Autoencoder::load(const std::string& dir) {
    Checkpoint ck = load_checkpoint(dir);
    if (ck.meta_or("kind", "") != "autoencoder")
        throw std::invalid_argument("load autoencoder: " + dir + " is a " + ck.meta_or("kind", "?") +
                                    " checkpoint");
    Rng rng(0);
    Autoencoder model(rng);
    model.enc1.W = ck.get("enc1_w");
    model.enc1.b = ck.get("enc1_b");
    model.enc2.W = ck.get("enc2_w");
    model.enc2.b = ck.get("enc2_b");
    model.dec1.W = ck.get("dec1_w");
    model.dec1.b = ck.get("dec1_b");
    model.dec2.W = ck.get("dec2_w");
    model.dec2.b = ck.get("dec2_b");
    return model;
}

AeTrainReport train_ae(Autoencoder& model, const std::vector<Tensor>& dataset, int epochs,
                       double lr, Rng& rng) {
    if (dataset.size() < 2) throw std::invalid_argument("train_ae: need at least 2 images");
    size_t train_n = dataset.size() - std::max<size_t>(1, dataset.size() / 10);

    auto holdout_metrics = [&](AeTrainReport& r) {
        double mse = 0.0, var = 0.0;
        for (size_t i = train_n; i < dataset.size(); ++i) {
            mse += model.decode(model.encode(dataset[i])).mse(dataset[i]);
            var += dataset[i].variance();
        }
        double n = static_cast<double>(dataset.size() - train_n);
        r.holdout_mse = mse / n;
        r.holdout_variance = var / n;
    };

    AeTrainReport report;
    holdout_metrics(report);
    report.untrained_mse = report.holdout_mse;

    Adam opt(lr);
    std::vector<size_t> order(train_n);
    for (size_t i = 0; i < train_n; ++i) order[i] = i;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        // deterministic reshuffle per epoch
        for (size_t i = train_n; i > 1; --i) std::swap(order[i - 1], order[rng.next_u64() % i]);
        double total = 0.0;
        for (size_t i : order) {
            model.zero_grads();
            double loss = model.recon_loss_and_grads(dataset[i]);
            if (!std::isfinite(loss)) throw std::runtime_error("train_ae: non-finite loss");
            total += loss;
            opt.step(model.params(), model.grads());
        }
        report.epoch_loss.push_back(total / static_cast<double>(train_n));
    }
    holdout_metrics(report);
    return report;
}

}  // namespace lss
