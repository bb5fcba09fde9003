#include "lss/sampler.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace lss {

const char* scaling_method_name(ScalingMethod m) {
    switch (m) {
        case ScalingMethod::ResnetUpsampler: return "resnet_upsampler";
        case ScalingMethod::LatentBilinear: return "latent_bilinear";
        case ScalingMethod::PixelRoundtrip: return "pixel_roundtrip";
    }
    return "?";
}

ScalingMethod scaling_method_from(const std::string& name) {
    if (name == "resnet_upsampler") return ScalingMethod::ResnetUpsampler;
    if (name == "latent_bilinear") return ScalingMethod::LatentBilinear;
    if (name == "pixel_roundtrip") return ScalingMethod::PixelRoundtrip;
    throw std::invalid_argument("unknown scaling method: " + name);
}

Tensor fm_euler_step(const Tensor& z, double t_hi, double t_lo, const Backbone& backbone) {
    if (!(t_hi <= 1.0 && t_hi > t_lo && t_lo >= 0.0))
        throw std::invalid_argument("fm_euler_step: need 1 >= t_hi > t_lo >= 0");
    Tensor v = backbone.predict_velocity(z, t_hi);
    Tensor out(z.shape);
    double dt = t_lo - t_hi;
    for (int64_t i = 0; i < z.size(); ++i) out[i] = z[i] + dt * v[i];
    return out;
}

Tensor ddim_step(const Tensor& z, double t_hi, double t_lo, const Backbone& backbone) {
    if (!(t_hi <= 1.0 && t_hi >= t_lo && t_lo >= 0.0))
        throw std::invalid_argument("ddim_step: need 1 >= t_hi >= t_lo >= 0");
    Tensor eps = backbone.predict_eps(z, t_hi);
    Tensor x0 = backbone.predict_x0(z, t_hi);
    Tensor out(z.shape);
    for (int64_t i = 0; i < z.size(); ++i) out[i] = (1.0 - t_lo) * x0[i] + t_lo * eps[i];
    return out;
}

Tensor compensate(const Tensor& z_up, double sigma_init, Rng& rng) {
    if (!(sigma_init >= 0.0 && sigma_init <= 1.0))
        throw std::invalid_argument("compensate: sigma_init must lie in [0,1]");
    Tensor eps = rng.normal_tensor(z_up.shape);
    Tensor out(z_up.shape);
    for (int64_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - sigma_init) * z_up[i] + sigma_init * eps[i];
    return out;
}

namespace {

// Shared denoising loop: advances z along sched.times[from..end] and
// appends step records and snapshots.
void run_schedule(Tensor& z, const NoiseSchedule& sched, int from, const Backbone& backbone,
                  int stage_no, Trajectory* traj, int snapshot_stride) {
    bool euler = backbone.mode() == PredMode::Velocity;
    int steps = sched.steps();
    for (int i = from; i < steps; ++i) {
        double t_hi = sched.times[static_cast<size_t>(i)];
        double t_lo = sched.times[static_cast<size_t>(i) + 1];
        if (traj) {
            StepRecord rec;
            rec.stage = stage_no;
            rec.index = i;
            rec.t_hi = t_hi;
            rec.t_lo = t_lo;
            rec.sigma = t_hi;
            rec.mean = z.mean();
            rec.var = z.variance();
            traj->steps.push_back(rec);
            if (snapshot_stride > 0 && (i - from) % snapshot_stride == 0) {
                traj->snapshots.push_back(backbone.predict_x0(z, t_hi));
                traj->snapshot_t.push_back(t_hi);
                traj->snapshot_stage.push_back(stage_no);
            }
        }
        z = euler ? fm_euler_step(z, t_hi, t_lo, backbone) : ddim_step(z, t_hi, t_lo, backbone);
    }
    z.require_finite("sampler state");
    if (traj && snapshot_stride > 0) {
        // closing snapshot at t = 0: the state itself is the clean latent
        traj->snapshots.push_back(z);
        traj->snapshot_t.push_back(0.0);
        traj->snapshot_stage.push_back(stage_no);
    }
}

}  // namespace

Tensor sample_single_stage(const Backbone& backbone, const NoiseSchedule& sched,
                           const std::vector<int>& shape, Rng& rng, Trajectory* traj,
                           int snapshot_stride) {
    if (sched.times.front() != 1.0 || sched.times.back() != 0.0)
        throw std::invalid_argument("sample_single_stage: schedule must run 1 -> 0");
    Tensor z = rng.normal_tensor(shape);
    run_schedule(z, sched, 0, backbone, 1, traj, snapshot_stride);
    return z;
}

SampleResult sample_lssgen(const SamplerConfig& cfg, const Backbone& backbone,
                           const ResnetUpsampler* upsampler, const Codec& codec) {
    int factor = codec.spatial_factor();
    if (upsampler && upsampler->channels() != codec.latent_channels())
        throw std::invalid_argument("upsampler channels do not match codec latent channels");

    StagePlan plan = plan_stages(cfg.min_resolution, cfg.target_resolution, cfg.base_resolution,
                                 cfg.base_steps, cfg.sigma_init, cfg.shorten_steps, cfg.shift,
                                 cfg.shift_convention, cfg.stage_overrides);
    if (plan.stages.size() > 1 && cfg.scaling_method == ScalingMethod::ResnetUpsampler && !upsampler)
        throw std::invalid_argument("resnet_upsampler method needs an upsampler");
    for (const Stage& stage : plan.stages)
        if (stage.resolution % factor != 0)
            throw std::invalid_argument("stage resolution " + std::to_string(stage.resolution) +
                                        " not divisible by codec factor " + std::to_string(factor));

    SampleResult result;
    result.plan = plan;
    Rng rng(cfg.seed);

    Tensor z({1});
    for (size_t s = 0; s < plan.stages.size(); ++s) {
        const Stage& stage = plan.stages[s];
        int latent_side = stage.resolution / factor;
        NoiseSchedule sched = stage_schedule(plan, static_cast<int>(s), cfg.shift, cfg.shift_convention);

        StageRecord rec;
        rec.stage = static_cast<int>(s) + 1;
        rec.resolution = stage.resolution;
        rec.planned_steps = stage.steps;
        rec.resume_index = stage.resume;
        rec.executed_steps = stage.executed_steps();
        rec.sigma_init = stage.sigma_init;

        if (s == 0) {
            z = rng.normal_tensor({codec.latent_channels(), latent_side, latent_side});
        } else {
            Tensor z_up({1});
            switch (cfg.scaling_method) {
                case ScalingMethod::ResnetUpsampler: z_up = upsampler->apply(z); break;
                case ScalingMethod::LatentBilinear: z_up = bilinear_latent(z); break;
                case ScalingMethod::PixelRoundtrip: z_up = pixel_roundtrip_upscale(codec, z); break;
            }
            z = compensate(z_up, cfg.sigma_init, rng);
            rec.blend_variance = z.variance();
        }
        result.traj.stages.push_back(rec);
        run_schedule(z, sched, stage.resume, backbone, rec.stage, &result.traj, cfg.snapshot_stride);
    }

    result.latent = z;
    result.image = codec.decode(z);
    return result;
}

std::vector<SpectralProfile> trajectory_band_energy(const Trajectory& traj) {
    if (traj.snapshots.empty())
        throw std::invalid_argument("trajectory has no snapshots; rerun with snapshot_stride >= 1");
    std::vector<SpectralProfile> out;
    out.reserve(traj.snapshots.size());
    for (const Tensor& snap : traj.snapshots) out.push_back(radial_power_spectrum({snap}));
    return out;
}

std::vector<double> band_reach_times(const Trajectory& traj, int stage, double frac) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < traj.snapshots.size(); ++i)
        if (traj.snapshot_stage[i] == stage) idx.push_back(i);
    if (idx.empty()) throw std::invalid_argument("no snapshots for stage " + std::to_string(stage));

    std::vector<std::vector<double>> energy;  // [snapshot][band]
    for (size_t i : idx) energy.push_back(radial_power_spectrum({traj.snapshots[i]}).power);

    size_t bands = energy.back().size();
    std::vector<double> reach(bands, 0.0);
    for (size_t b = 0; b < bands; ++b) {
        double need = frac * energy.back()[b];
        size_t first = energy.size() - 1;
        for (size_t i = energy.size(); i-- > 0;) {
            if (energy[i][b] >= need)
                first = i;
            else
                break;  // must stay above the threshold from here on
        }
        reach[b] = traj.snapshot_t[idx[first]];
    }
    return reach;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "stage,index,t_hi,t_lo,sigma,mean,var\n";
    for (const StepRecord& r : traj.steps)
        out << r.stage << "," << r.index << "," << r.t_hi << "," << r.t_lo << "," << r.sigma << ","
            << r.mean << "," << r.var << "\n";
    out << "\nstage,resolution,planned_steps,resume_index,executed_steps,sigma_init,blend_variance\n";
    for (const StageRecord& r : traj.stages)
        out << r.stage << "," << r.resolution << "," << r.planned_steps << "," << r.resume_index << ","
            << r.executed_steps << "," << r.sigma_init << "," << r.blend_variance << "\n";
}

}  // namespace lss
