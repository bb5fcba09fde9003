#pragma once

#include <string>
#include <vector>

#include "lss/autoencoder.hpp"
#include "lss/backbone.hpp"
#include "lss/rng.hpp"
#include "lss/schedule.hpp"
#include "lss/tensor.hpp"
#include "lss/upsampler.hpp"

namespace lss {

enum class ScalingMethod { ResnetUpsampler, LatentBilinear, PixelRoundtrip };

const char* scaling_method_name(ScalingMethod m);
ScalingMethod scaling_method_from(const std::string& name);

// All resolutions are pixel-space side lengths; latent sizes follow from
// the codec's spatial factor.
struct SamplerConfig {
    int min_resolution = 0;
    int target_resolution = 0;
    int base_resolution = 0;
    int base_steps = 0;
    double sigma_init = 0.75;
    bool shorten_steps = true;
    bool shift = false;
    ShiftConvention shift_convention = ShiftConvention::PixelCount;
    ScalingMethod scaling_method = ScalingMethod::ResnetUpsampler;
    uint64_t seed = 0;
    std::vector<int> stage_overrides;  // optional planned steps per stage
    int snapshot_stride = 0;           // 0 = no snapshots, 1 = every step
};

struct StepRecord {
    int stage = 0;  // 1-based
    int index = 0;  // grid index of t_hi within the stage schedule
    double t_hi = 0.0, t_lo = 0.0;
    double sigma = 0.0;  // noise coefficient at t_hi
    double mean = 0.0, var = 0.0;  // state statistics before the update
};

struct StageRecord {
    int stage = 0;
    int resolution = 0;  // pixel side
    int planned_steps = 0;
    int resume_index = 0;
    int executed_steps = 0;
    double sigma_init = 1.0;
    double blend_variance = -1.0;  // state variance right after compensate
};

struct Trajectory {
    std::vector<StepRecord> steps;
    std::vector<StageRecord> stages;
    std::vector<Tensor> snapshots;  // predicted clean latents
    std::vector<double> snapshot_t;
    std::vector<int> snapshot_stage;
};

// One integration step. Velocity-mode backbones step the flow ODE with
// Euler; epsilon-mode backbones use the deterministic reconstruct-renoise
// update. Under exact predictors the two coincide.
Tensor fm_euler_step(const Tensor& z, double t_hi, double t_lo, const Backbone& backbone);
Tensor ddim_step(const Tensor& z, double t_hi, double t_lo, const Backbone& backbone);

// Re-noises an upscaled latent to noise level sigma_init. Always draws the
// noise tensor, so RNG consumption does not depend on the blend weight.
Tensor compensate(const Tensor& z_up, double sigma_init, Rng& rng);

// Full denoising run from pure noise along the given schedule.
Tensor sample_single_stage(const Backbone& backbone, const NoiseSchedule& sched,
                           const std::vector<int>& shape, Rng& rng, Trajectory* traj = nullptr,
                           int snapshot_stride = 0);

struct SampleResult {
    Tensor image;   // decoded pixels
    Tensor latent;  // final clean latent
    Trajectory traj;
    StagePlan plan;
};

// Progressive multi-stage generation: full sampling at the lowest
// resolution, then per stage upscale -> re-noise -> resume denoising, and a
// final decode. Noise is drawn stage-major from the config seed, so a
// single-stage plan consumes the RNG exactly like the baseline sampler.
SampleResult sample_lssgen(const SamplerConfig& cfg, const Backbone& backbone,
                           const ResnetUpsampler* upsampler, const Codec& codec);

// Per-snapshot radial band energies of the predicted clean latent.
std::vector<SpectralProfile> trajectory_band_energy(const Trajectory& traj);

// For each band, the time t at which the snapshot energy first stays at or
// above frac times its final value. Larger t = earlier in the run.
std::vector<double> band_reach_times(const Trajectory& traj, int stage, double frac);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace lss
