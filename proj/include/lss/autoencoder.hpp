#pragma once

#include <string>
#include <vector>

#include "lss/layers.hpp"
#include "lss/rng.hpp"
#include "lss/tensor.hpp"

namespace lss {

// Maps pixel images to latents and back. Implementations are deterministic
// and immutable once trained, so they can be shared across threads.
class Codec {
public:
    virtual ~Codec() = default;
    virtual Tensor encode(const Tensor& x) const = 0;
    virtual Tensor decode(const Tensor& z) const = 0;
    virtual int latent_channels() const = 0;
    virtual int spatial_factor() const = 0;  // pixel side / latent side
    virtual std::string name() const = 0;
};

// Latents are the pixels themselves. Used for debugging and for runs where
// the analytic field oracles must see the raw distribution.
class IdentityCodec final : public Codec {
public:
    Tensor encode(const Tensor& x) const override;
    Tensor decode(const Tensor& z) const override;
    int latent_channels() const override { return 1; }
    int spatial_factor() const override { return 1; }
    std::string name() const override { return "identity"; }
};

// Small convolutional autoencoder: two stride-2 convs down to 4 channels at
// quarter resolution, mirrored transposed convs back up. Deterministic (no
// sampling in the bottleneck).
class Autoencoder final : public Codec {
public:
    explicit Autoencoder(Rng& rng);

    Tensor encode(const Tensor& x) const override;
    Tensor decode(const Tensor& z) const override;
    int latent_channels() const override { return 4; }
    int spatial_factor() const override { return 4; }
    std::string name() const override { return "conv4x"; }

    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();
    void zero_grads();

    // One reconstruction pass: returns MSE(decode(encode(x)), x) and
    // accumulates parameter gradients.
    double recon_loss_and_grads(const Tensor& x);

    void save(const std::string& dir) const;
    static Autoencoder load(const std::string& dir);

    Conv2dLayer enc1, enc2;
    ConvTranspose2dLayer dec1, dec2;
};

struct AeTrainReport {
    std::vector<double> epoch_loss;    // mean training loss per epoch
    double holdout_mse = 0.0;          // reconstruction MSE on the held-out split
    double holdout_variance = 0.0;     // pixel variance of the held-out split
    double untrained_mse = 0.0;        // same metric before any update
};

// Trains on the first 90% of the dataset with Adam, reports reconstruction
// quality on the remaining 10%. Aborts on non-finite loss.
AeTrainReport train_ae(Autoencoder& model, const std::vector<Tensor>& dataset, int epochs,
                       double lr, Rng& rng);

}  // namespace lss
