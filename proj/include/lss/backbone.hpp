#pragma once

#include <map>
#include <string>
#include <vector>

#include "lss/grf.hpp"
#include "lss/layers.hpp"
#include "lss/rng.hpp"
#include "lss/tensor.hpp"

namespace lss {

enum class PredMode { Velocity, Epsilon };

const char* pred_mode_name(PredMode mode);
PredMode pred_mode_from(const std::string& name);

// A denoising predictor over latent states z_t = (1-t) z0 + t eps. Each
// implementation predicts natively in one mode; the other quantities are
// derived through the state identity. At t = 1 the epsilon-mode conversion
// pins x0 to the data mean (zero) instead of dividing by 1-t.
class Backbone {
public:
    virtual ~Backbone() = default;
    virtual PredMode mode() const = 0;
    virtual Tensor predict(const Tensor& z_t, double t) const = 0;  // native mode
    virtual std::string name() const = 0;

    Tensor predict_velocity(const Tensor& z_t, double t) const;
    Tensor predict_eps(const Tensor& z_t, double t) const;
    Tensor predict_x0(const Tensor& z_t, double t) const;
};

// Exact minimum-MSE predictor for gaussian random fields, one registered
// spectrum per spatial resolution. Channels are treated as independent
// fields of the registered law.
class AnalyticBackbone final : public Backbone {
public:
    explicit AnalyticBackbone(PredMode mode) : mode_(mode) {}
    void register_spec(const GrfSpec& spec);
    const GrfSpec& spec_for(int resolution) const;

    PredMode mode() const override { return mode_; }
    Tensor predict(const Tensor& z_t, double t) const override;
    std::string name() const override { return "analytic"; }

private:
    PredMode mode_;
    std::map<int, GrfSpec> specs_;
};

// Small fully convolutional denoiser: conv 3x3 into 32 channels, sinusoidal
// time embedding added per channel, then three more 3x3 convs with SiLU
// between. Resolution-agnostic; the final conv is zero-initialized so the
// untrained model predicts exactly zero.
class LearnedBackbone final : public Backbone {
public:
    static constexpr int kWidth = 32;

    LearnedBackbone(PredMode mode, int channels, Rng& rng);

    PredMode mode() const override { return mode_; }
    Tensor predict(const Tensor& z_t, double t) const override;
    std::string name() const override { return "learned"; }

    int channels() const { return channels_; }
    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();
    void zero_grads();
    int64_t param_count();

    // MSE against target plus parameter gradients, for training and for
    // finite-difference verification.
    double loss_and_grads(const Tensor& z_t, double t, const Tensor& target);

    void save(const std::string& dir) const;
    static LearnedBackbone load(const std::string& dir);

    static Tensor time_embedding(double t);

    Conv2dLayer conv1, conv2, conv3, conv4;
    LinearLayer time_lin;

private:
    PredMode mode_;
    int channels_;
};

struct TrainReport {
    std::vector<double> epoch_loss;
    double holdout_loss = -1.0;       // loss on fixed held-out probes after training
    double untrained_loss = -1.0;     // same probes before any update
    double target_power = -1.0;       // mean squared target (zero-predictor baseline)
    // filled only when an oracle spec is supplied:
    double oracle_loss = -1.0;        // analytic predictor's loss on the probes
    double oracle_gap_mse = -1.0;     // MSE(model, analytic) on the probes
    double oracle_pred_power = -1.0;  // mean squared analytic prediction
};

// Flow-matching / denoising training on clean latents: per sample draw
// t ~ U(0.01, 0.99) and fresh noise, form z_t, regress on the mode's target
// (eps - z0 for velocity, eps for epsilon). Last 10% held out. When
// oracle_spec is given (identity-codec data), the report also measures the
// gap to the analytic optimum.
TrainReport train_backbone(LearnedBackbone& model, const std::vector<Tensor>& latents, int epochs,
                           double lr, Rng& rng, const GrfSpec* oracle_spec = nullptr);

void write_train_report_csv(const std::string& path, const TrainReport& report);

}  // namespace lss
