#include "lss/costmodel.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lss {

double CostParams::tokens_of(int resolution) const {
    if (resolution <= 0) throw std::invalid_argument("tokens_of: resolution must be positive");
    double n = static_cast<double>(resolution) / patch;
    return n * n + context_tokens;
}

double CostParams::step_cost(int resolution) const {
    double L = tokens_of(resolution);
    return a * L + b * L * L;
}

CostParams fit_cost(const std::vector<std::pair<double, double>>& observations, int patch,
                    int context_tokens) {
    if (observations.size() < 2) throw std::invalid_argument("fit_cost: need at least 2 observations");
    bool distinct = false;
    for (size_t i = 1; i < observations.size(); ++i)
        if (observations[i].first != observations[0].first) distinct = true;
    if (!distinct) throw std::invalid_argument("fit_cost: observations need distinct token counts");
    for (const auto& [tokens, cost] : observations)
        if (tokens <= 0.0) throw std::invalid_argument("fit_cost: token counts must be positive");

    // normal equations for basis {L, L^2}
    double s2 = 0, s3 = 0, s4 = 0, r1 = 0, r2 = 0;
    for (const auto& [L, c] : observations) {
        s2 += L * L;
        s3 += L * L * L;
        s4 += L * L * L * L;
        r1 += L * c;
        r2 += L * L * c;
    }
    double det = s2 * s4 - s3 * s3;
    CostParams params;
    params.patch = patch;
    params.context_tokens = context_tokens;
    if (std::abs(det) < 1e-12 * s2 * s4) {
        params.a = r1 / s2;  // collinear designs fall back to the linear term
        params.near_linear = true;
        return params;
    }
    params.a = (r1 * s4 - r2 * s3) / det;
    params.b = (s2 * r2 - s3 * r1) / det;
    if (params.b < 0.0) {
        params.b = 0.0;
        params.a = r1 / s2;
        params.near_linear = true;
        params.clamped = true;
    }
    if (params.a < 0.0) {
        params.a = 0.0;
        params.b = r2 / s4;
        params.clamped = true;
    }
    return params;
}

CostReport predict_plan_cost(const CostParams& params, const StagePlan& plan) {
    CostReport report;
    for (const Stage& stage : plan.stages) {
        StageCost sc;
        sc.resolution = stage.resolution;
        sc.steps = stage.executed_steps();
        sc.tokens = params.tokens_of(stage.resolution);
        sc.per_step = params.step_cost(stage.resolution);
        sc.total = sc.per_step * sc.steps;
        report.total += sc.total;
        report.stages.push_back(sc);
    }
    report.baseline_total = params.step_cost(plan.target_resolution) * plan.base_steps;
    report.speedup = report.total > 0.0 ? report.baseline_total / report.total : 0.0;
    return report;
}

double measure_wall_time(const std::function<void()>& run) {
    auto start = std::chrono::steady_clock::now();
    run();
    auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

void write_cost_report_csv(const std::string& path, const CostReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "stage,resolution,steps,tokens,per_step,total\n";
    for (size_t i = 0; i < report.stages.size(); ++i) {
        const StageCost& s = report.stages[i];
        out << (i + 1) << "," << s.resolution << "," << s.steps << "," << s.tokens << "," << s.per_step
            << "," << s.total << "\n";
    }
    out << "\nmetric,value\n";
    out << "total," << report.total << "\n";
    out << "baseline_total," << report.baseline_total << "\n";
    out << "speedup," << report.speedup << "\n";
    if (report.wall_seconds >= 0.0) out << "wall_seconds," << report.wall_seconds << "\n";
}

std::string cost_report_table(const CostReport& report) {
    std::ostringstream out;
    out << "stage resolution steps per-step total\n";
    for (size_t i = 0; i < report.stages.size(); ++i) {
        const StageCost& s = report.stages[i];
        out << (i + 1) << " " << s.resolution << " " << s.steps << " " << s.per_step << " " << s.total
            << "\n";
    }
    out << "plan total " << report.total << " baseline " << report.baseline_total << " speedup "
        << report.speedup << "\n";
    return out.str();
}

}  // namespace lss
