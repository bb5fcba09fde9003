#pragma once

#include <vector>

namespace lss {

// Unified noise coordinates: the state at time t is (1-t)*z0 + t*eps, so
// sigma(t) = t and the diffusion-style alpha_bar(t) = (1-t)^2. Time runs
// from 1 (pure noise) down to 0 (clean sample).

double snr_of_sigma(double sigma);   // (1-s)^2 / s^2, rejects s in {0,1}
double sigma_of_snr(double snr);     // 1 / (1 + sqrt(snr)), rejects snr < 0

// Moebius reallocation of timesteps between resolutions:
//   t' = s*t / (1 + (s-1)*t)
// Composes multiplicatively in s and fixes 0 and 1. s < 1 is rejected
// because stages only ever upscale.
double shift_time(double t, double s);

enum class ShiftConvention {
    PixelCount,  // s = high_res/low_res in side lengths == sqrt of pixel ratio
    SideLength,  // s = sqrt(high_res/low_res)
};

double shift_factor(int resolution, int base_resolution,
                    ShiftConvention conv = ShiftConvention::PixelCount);

struct NoiseSchedule {
    std::vector<double> times;  // descending, times.front()==1, back()==0
    double shift = 1.0;
    int resolution = 0;
    int steps() const { return static_cast<int>(times.size()) - 1; }
};

// Uniform descending grid t_i = 1 - i/steps; with apply_shift the interior
// points are pushed toward 1 by shift_time using the resolution ratio
// (clamped to 1 for stages at or below base_resolution).
NoiseSchedule build_schedule(int steps, int resolution, int base_resolution,
                             bool apply_shift,
                             ShiftConvention conv = ShiftConvention::PixelCount);

// Smallest index whose grid time is <= sigma_init; sampling resumes there.
int resume_index(const NoiseSchedule& sched, double sigma_init);

struct Stage {
    int resolution = 0;
    int steps = 0;           // full grid steps planned for this stage
    double sigma_init = 1;   // 1 for the first stage (starts from pure noise)
    int resume = 0;          // grid index sampling starts from
    bool overridden = false; // steps pinned by the caller; grid re-spaced
    int executed_steps() const { return steps - resume; }
};

struct StagePlan {
    std::vector<Stage> stages;
    int base_steps = 0;
    int base_resolution = 0;
    int target_resolution = 0;
    bool shorten = false;
};

// Stage n of N runs at min_resolution * 2^(n-1). With shorten_steps on,
// stages below base_resolution plan base_steps / 2^(N-n) grid steps (floor,
// at least 1). Later stages resume partway per sigma_init. stage_overrides,
// when non-empty, pins the per-stage executed step counts: each overridden
// stage gets a uniform grid from its start level straight down to 0 (no
// resume trimming and no shift), reproducing published step splits exactly.
StagePlan plan_stages(int min_resolution, int target_resolution, int base_resolution,
                      int base_steps, double sigma_init, bool shorten,
                      bool apply_shift = false,
                      ShiftConvention conv = ShiftConvention::PixelCount,
                      const std::vector<int>& stage_overrides = {});

NoiseSchedule stage_schedule(const StagePlan& plan, int stage_index, bool apply_shift,
                             ShiftConvention conv = ShiftConvention::PixelCount);

// Noise level after upscaling a clean-ish latent by side factor s, reported
// two ways: the paper-style linear rule (3/4 per doubling, composed as
// (3/4)^log2(s)) and the exact variance-preserving rule that divides SNR
// by s^2. Valid for sigma in (0,1] and s >= 1.
struct SigmaRescale {
    double linear_rule = 0.0;
    double exact_vp = 0.0;
};
SigmaRescale sigma_after_upscale(double sigma, double s);

}  // namespace lss
