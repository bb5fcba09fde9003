#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lss/schedule.hpp"

namespace lss {

// Per-step inference cost as a function of token count L: cost = a*L + b*L^2.
// Tokens for a square image are (side/patch)^2 plus a fixed context block.
struct CostParams {
    double a = 0.0;
    double b = 0.0;
    int patch = 16;
    int context_tokens = 512;
    bool near_linear = false;  // set when the quadratic term was clamped to 0
    bool clamped = false;      // set whenever any coefficient was clamped

    double tokens_of(int resolution) const;
    double step_cost(int resolution) const;
};

// Least-squares fit of cost = a*L + b*L^2 over (tokens, cost) observations.
// Negative coefficients are clamped to zero and the remaining term refit;
// a clamped quadratic term flags the regime as near-linear.
CostParams fit_cost(const std::vector<std::pair<double, double>>& observations, int patch = 16,
                    int context_tokens = 512);

struct StageCost {
    int resolution = 0;
    int steps = 0;  // executed steps
    double tokens = 0.0;
    double per_step = 0.0;
    double total = 0.0;
};

struct CostReport {
    std::vector<StageCost> stages;
    double total = 0.0;
    double baseline_total = 0.0;  // base_steps at the target resolution
    double speedup = 0.0;         // baseline_total / total
    double wall_seconds = -1.0;   // optional measurement
};

// Predicted cost of executing a stage plan, versus the single-stage
// baseline at the plan's target resolution.
CostReport predict_plan_cost(const CostParams& params, const StagePlan& plan);

double measure_wall_time(const std::function<void()>& run);

void write_cost_report_csv(const std::string& path, const CostReport& report);
std::string cost_report_table(const CostReport& report);

}  // namespace lss
