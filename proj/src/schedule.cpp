#include "lss/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lss {

double snr_of_sigma(double sigma) {
    if (!(sigma > 0.0 && sigma < 1.0)) {
        throw std::invalid_argument("snr_of_sigma: sigma must be in (0,1), got " + std::to_string(sigma));
    }
    double a = (1.0 - sigma) / sigma;
    return a * a;
}

double sigma_of_snr(double snr) {
    if (!(snr >= 0.0)) throw std::invalid_argument("sigma_of_snr: snr must be >= 0");
    return 1.0 / (1.0 + std::sqrt(snr));
}

double shift_time(double t, double s) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("shift_time: t must be in [0,1], got " + std::to_string(t));
    }
    if (!(s >= 1.0)) {
        throw std::invalid_argument("shift_time: s must be >= 1 (stages only upscale), got " +
                                    std::to_string(s));
    }
    return s * t / (1.0 + (s - 1.0) * t);
}

double shift_factor(int resolution, int base_resolution, ShiftConvention conv) {
    if (resolution <= 0 || base_resolution <= 0) {
        throw std::invalid_argument("shift_factor: resolutions must be positive");
    }
    if (resolution <= base_resolution) return 1.0;  // stages only upscale
    double ratio = static_cast<double>(resolution) / base_resolution;
    return conv == ShiftConvention::PixelCount ? ratio : std::sqrt(ratio);
}

NoiseSchedule build_schedule(int steps, int resolution, int base_resolution,
                             bool apply_shift, ShiftConvention conv) {
    if (steps <= 0) throw std::invalid_argument("build_schedule: steps must be positive");
    NoiseSchedule sched;
    sched.resolution = resolution;
    sched.shift = apply_shift ? shift_factor(resolution, base_resolution, conv) : 1.0;
    sched.times.resize(static_cast<size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        double t = 1.0 - static_cast<double>(i) / steps;
        sched.times[static_cast<size_t>(i)] = shift_time(t, sched.shift);
    }
    sched.times.front() = 1.0;
    sched.times.back() = 0.0;
    return sched;
}

int resume_index(const NoiseSchedule& sched, double sigma_init) {
    if (!(sigma_init > 0.0 && sigma_init <= 1.0)) {
        throw std::invalid_argument("resume_index: sigma_init must be in (0,1]");
    }
    for (size_t i = 0; i < sched.times.size(); ++i) {
        if (sched.times[i] <= sigma_init) return static_cast<int>(i);
    }
    return sched.steps();  // unreachable, times end at 0
}

StagePlan plan_stages(int min_resolution, int target_resolution, int base_resolution,
                      int base_steps, double sigma_init, bool shorten,
                      bool apply_shift, ShiftConvention conv,
                      const std::vector<int>& stage_overrides) {
    if (min_resolution <= 0 || target_resolution < min_resolution) {
        throw std::invalid_argument("plan_stages: need 0 < min_resolution <= target_resolution");
    }
    if (base_steps <= 0) throw std::invalid_argument("plan_stages: base_steps must be positive");
    int n_stages = 1, r = min_resolution;
    while (r < target_resolution) {
        r *= 2;
        ++n_stages;
    }
    if (r != target_resolution) {
        throw std::invalid_argument("plan_stages: target_resolution must be min_resolution * 2^k");
    }
    if (!stage_overrides.empty() && static_cast<int>(stage_overrides.size()) != n_stages) {
        throw std::invalid_argument("plan_stages: stage override count does not match stage count");
    }

    StagePlan plan;
    plan.base_steps = base_steps;
    plan.base_resolution = base_resolution;
    plan.target_resolution = target_resolution;
    plan.shorten = shorten;
    for (int n = 1; n <= n_stages; ++n) {
        Stage st;
        st.resolution = min_resolution << (n - 1);
        if (!stage_overrides.empty()) {
            st.steps = stage_overrides[static_cast<size_t>(n - 1)];
            if (st.steps <= 0) throw std::invalid_argument("plan_stages: stage override must be positive");
            st.overridden = true;
            st.sigma_init = n == 1 ? 1.0 : sigma_init;
            st.resume = 0;
        } else if (n == 1) {
            st.steps = shorten && st.resolution < base_resolution
                           ? std::max(1, base_steps >> (n_stages - 1))
                           : base_steps;
            st.sigma_init = 1.0;
            st.resume = 0;
        } else {
            st.steps = shorten && st.resolution < base_resolution
                           ? std::max(1, base_steps >> (n_stages - n))
                           : base_steps;
            st.sigma_init = sigma_init;
            NoiseSchedule sched = build_schedule(st.steps, st.resolution, base_resolution,
                                                 apply_shift, conv);
            st.resume = resume_index(sched, sigma_init);
        }
        plan.stages.push_back(st);
    }
    return plan;
}

NoiseSchedule stage_schedule(const StagePlan& plan, int stage_index, bool apply_shift,
                             ShiftConvention conv) {
    if (stage_index < 0 || stage_index >= static_cast<int>(plan.stages.size())) {
        throw std::out_of_range("stage_schedule: bad stage index");
    }
    const Stage& st = plan.stages[static_cast<size_t>(stage_index)];
    if (st.overridden) {
        // pinned executed count: uniform grid from the stage's start level
        NoiseSchedule sched;
        sched.resolution = st.resolution;
        for (int i = 0; i <= st.steps; ++i) {
            sched.times.push_back(st.sigma_init * (1.0 - static_cast<double>(i) / st.steps));
        }
        return sched;
    }
    return build_schedule(st.steps, st.resolution, plan.base_resolution, apply_shift, conv);
}

SigmaRescale sigma_after_upscale(double sigma, double s) {
    if (!(sigma > 0.0 && sigma <= 1.0)) {
        throw std::invalid_argument("sigma_after_upscale: sigma must be in (0,1]");
    }
    if (!(s >= 1.0)) throw std::invalid_argument("sigma_after_upscale: s must be >= 1");
    SigmaRescale out;
    out.linear_rule = sigma * std::pow(0.75, std::log2(s));
    // 1/(1 + sqrt(snr)/s) written without snr_of_sigma so sigma = 1 stays valid
    out.exact_vp = sigma * s / (sigma * s + (1.0 - sigma));
    return out;
}

}  // namespace lss
