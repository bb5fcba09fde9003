#include <cmath>
#include <vector>

#include "doctest.h"
#include "lss/autoencoder.hpp"
#include "lss/grf.hpp"
#include "lss/layers.hpp"

using namespace lss;

namespace {

std::vector<Tensor> sample_batch(const GrfSpec& spec, int n, Rng& rng) {
    std::vector<Tensor> out;
    for (int i = 0; i < n; ++i) out.push_back(grf_sample(spec, rng));
    return out;
}

double batch_mse(const Autoencoder& model, const std::vector<Tensor>& batch) {
    double total = 0.0;
    for (const Tensor& x : batch) total += model.decode(model.encode(x)).mse(x);
    return total / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("identity codec passes tensors through") {
    Rng rng(1);
    Tensor x({1, 8, 8});
    for (auto& v : x.data) v = rng.normal();
    IdentityCodec codec;
    Tensor z = codec.encode(x);
    CHECK(z.shape == x.shape);
    for (int64_t i = 0; i < x.size(); ++i) CHECK(z.data[i] == x.data[i]);
    Tensor y = codec.decode(z);
    for (int64_t i = 0; i < x.size(); ++i) CHECK(y.data[i] == x.data[i]);

    Tensor bad({1, 2, 8, 8});
    CHECK_THROWS_AS(codec.encode(bad), std::invalid_argument);
}

TEST_CASE("autoencoder maps 32x32 pixels to 4x8x8 latents and back") {
    Rng rng(2);
    Autoencoder model(rng);
    Tensor x({1, 32, 32});
    for (auto& v : x.data) v = rng.normal();
    Tensor z = model.encode(x);
    CHECK(z.shape == std::vector<int>{4, 8, 8});
    Tensor y = model.decode(z);
    CHECK(y.shape == std::vector<int>{1, 32, 32});
    CHECK(model.latent_channels() == 4);
    CHECK(model.spatial_factor() == 4);
}

TEST_CASE("autoencoder rejects malformed inputs") {
    Rng rng(3);
    Autoencoder model(rng);
    Tensor two_channel({2, 32, 32});
    CHECK_THROWS_AS(model.encode(two_channel), std::invalid_argument);
    Tensor odd({1, 30, 30});  // not divisible by 4
    CHECK_THROWS_AS(model.encode(odd), std::invalid_argument);
    Tensor bad_latent({3, 8, 8});
    CHECK_THROWS_AS(model.decode(bad_latent), std::invalid_argument);
}

TEST_CASE("reconstruction gradients match finite differences") {
    Rng rng(4);
    Autoencoder model(rng);
    Tensor x({1, 8, 8});
    for (auto& v : x.data) v = rng.normal();

    auto loss = [&] { return model.decode(model.encode(x)).mse(x); };
    auto compute = [&] {
        model.zero_grads();
        model.recon_loss_and_grads(x);
    };
    Rng pick(5);
    GradCheckReport rep =
        grad_check_fn(model.params(), model.grads(), loss, compute, 1e-5, 400, &pick);
    CHECK(rep.checked >= 300);
    CHECK(rep.pass(1e-6));
}

TEST_CASE("training on a constant field drives the loss near zero") {
    // a DC-only spectrum produces flat images; reconstructing a constant is
    // the easiest possible task and isolates optimizer wiring bugs
    GrfSpec spec;
    spec.size = 16;
    spec.lambda.assign(256, 1e-30);
    spec.lambda[0] = 256.0;
    Rng rng(6);
    std::vector<Tensor> batch = sample_batch(spec, 48, rng);
    Autoencoder model(rng);
    AeTrainReport report = train_ae(model, batch, 60, 2e-3, rng);
    CHECK(report.holdout_mse < 1e-3);
    CHECK(report.holdout_mse < report.untrained_mse);
}

TEST_CASE("training beats the mean predictor on random fields") {
    GrfSpec spec = GrfSpec::power_law(16, 2.0, 1.0);
    Rng rng(7);
    std::vector<Tensor> batch = sample_batch(spec, 128, rng);
    Autoencoder model(rng);
    AeTrainReport report = train_ae(model, batch, 30, 2e-3, rng);

    // predicting the mean would score the holdout variance; the trained
    // codec must do clearly better
    CHECK(report.holdout_mse < 0.5 * report.holdout_variance);
    CHECK(report.untrained_mse > report.holdout_mse);
    REQUIRE(report.epoch_loss.size() == 30);
    CHECK(report.epoch_loss.back() < report.epoch_loss.front());
}

TEST_CASE("encoding twice through the codec is stable") {
    GrfSpec spec = GrfSpec::power_law(16, 2.0, 1.0);
    Rng rng(8);
    std::vector<Tensor> batch = sample_batch(spec, 96, rng);
    Autoencoder model(rng);
    train_ae(model, batch, 30, 2e-3, rng);

    // the double roundtrip cannot beat the single one on average
    std::vector<Tensor> holdout = sample_batch(spec, 16, rng);
    double single = 0.0, twice = 0.0;
    for (const Tensor& x : holdout) {
        Tensor once = model.decode(model.encode(x));
        single += once.mse(x);
        twice += model.decode(model.encode(once)).mse(x);
    }
    CHECK(twice >= single * 0.999);
}

TEST_CASE("checkpoint round trip preserves the codec") {
    GrfSpec spec = GrfSpec::power_law(16, 2.0, 1.0);
    Rng rng(9);
    std::vector<Tensor> batch = sample_batch(spec, 32, rng);
    Autoencoder model(rng);
    train_ae(model, batch, 4, 2e-3, rng);

    std::string dir = "/tmp/lss_test_ae_ckpt";
    model.save(dir);
    Autoencoder loaded = Autoencoder::load(dir);
    CHECK(batch_mse(loaded, batch) == doctest::Approx(batch_mse(model, batch)).epsilon(1e-15));

    Tensor x = grf_sample(spec, rng);
    Tensor a = model.encode(x);
    Tensor b = loaded.encode(x);
    for (int64_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("training rejects empty and non-finite data") {
    Rng rng(10);
    Autoencoder model(rng);
    std::vector<Tensor> empty;
    CHECK_THROWS_AS(train_ae(model, empty, 1, 1e-3, rng), std::invalid_argument);
}
