#pragma once

#include <string>
#include <vector>

#include "lss/autoencoder.hpp"
#include "lss/grf.hpp"
#include "lss/layers.hpp"
#include "lss/rng.hpp"
#include "lss/tensor.hpp"

namespace lss {

// Residual block: x + conv(silu(conv(x))), second conv zero-initialized so
// the block starts as the identity.
struct ResBlock {
    Conv2dLayer a, b;
    ResBlock(int channels, Rng& rng);
};

// 2x latent upsampler: in-conv into a working width, residual blocks, one
// stride-2 transposed conv, out-conv back to the latent channel count. The
// out-conv is zero-initialized, so the untrained network maps everything
// to zero.
class ResnetUpsampler {
public:
    ResnetUpsampler(int channels, int width, int blocks, Rng& rng);

    Tensor apply(const Tensor& z) const;  // [d,h,w] -> [d,2h,2w]

    int channels() const { return channels_; }
    int width() const { return width_; }
    int block_count() const { return static_cast<int>(res_.size()); }
    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();
    void zero_grads();
    int64_t param_count();

    double loss_and_grads(const Tensor& z_low, const Tensor& z_high);

    void save(const std::string& dir) const;
    static ResnetUpsampler load(const std::string& dir);

    Conv2dLayer in_conv, out_conv;
    ConvTranspose2dLayer up_conv;

private:
    std::vector<ResBlock> res_;
    int channels_, width_;
};

// Baseline scalings with the same shape contract as apply().
Tensor bilinear_latent(const Tensor& z);
Tensor pixel_roundtrip_upscale(const Codec& codec, const Tensor& z);

struct UpsamplerMethodEval {
    std::string name;
    double mse = 0.0;
    double psnr = 0.0;
    std::vector<double> bands;  // mean radial power of the outputs
};

struct UpsamplerReport {
    std::vector<double> epoch_loss;
    double holdout_mse = -1.0;
    double bilinear_mse = -1.0;
    double oracle_mse = -1.0;           // empirical, identity codec only
    double oracle_mse_expected = -1.0;  // closed form, identity codec only
    double win_rate_vs_bilinear = 0.0;  // fraction of held-out pairs won
    int64_t param_count = 0;
    int holdout_pairs = 0;
    std::vector<UpsamplerMethodEval> methods;  // trained, bilinear, [oracle,] target
};

// Builds (encode(pool2(x)), encode(x)) pairs from fresh field samples and
// regresses the upsampler onto them; last 10% held out. With the identity
// codec the conditional-mean oracle provides the exact error floor.
UpsamplerReport train_upsampler(ResnetUpsampler& model, const Codec& codec, const GrfSpec& spec,
                                int pairs, int epochs, double lr, Rng& rng);

void write_upsampler_report_csv(const std::string& path, const UpsamplerReport& report);

}  // namespace lss
