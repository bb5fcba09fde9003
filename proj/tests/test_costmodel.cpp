#include <cmath>
#include <vector>

#include "doctest.h"
#include "lss/costmodel.hpp"
#include "lss/io.hpp"
#include "lss/schedule.hpp"

using namespace lss;

namespace {

// hand-built two-stage plan: n/2 steps at half resolution, n/2 at full
StagePlan half_split_plan(int resolution, int n) {
    StagePlan plan;
    Stage lo;
    lo.resolution = resolution / 2;
    lo.steps = n / 2;
    Stage hi;
    hi.resolution = resolution;
    hi.steps = n;
    hi.resume = n / 2;
    plan.stages = {lo, hi};
    plan.base_steps = n;
    plan.base_resolution = resolution;
    plan.target_resolution = resolution;
    return plan;
}

}  // namespace

TEST_CASE("token count follows patch grid plus context") {
    CostParams p;
    p.patch = 16;
    p.context_tokens = 512;
    CHECK(p.tokens_of(1024) == doctest::Approx(4608.0));
    CHECK(p.tokens_of(512) == doctest::Approx(1536.0));
    p.patch = 1;
    p.context_tokens = 0;
    CHECK(p.tokens_of(32) == doctest::Approx(1024.0));
}

TEST_CASE("fit recovers exact quadratic and linear laws") {
    // y = 2 L + 0.5 L^2
    std::vector<std::pair<double, double>> obs;
    for (double L : {64.0, 256.0, 1024.0}) obs.push_back({L, 2.0 * L + 0.5 * L * L});
    CostParams p = fit_cost(obs);
    CHECK(p.a == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(p.b == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_FALSE(p.near_linear);
    CHECK_FALSE(p.clamped);

    // pure linear observations give b = 0 rather than noise blowup
    obs.clear();
    for (double L : {64.0, 256.0, 1024.0}) obs.push_back({L, 3.0 * L});
    CostParams lin = fit_cost(obs);
    CHECK(lin.a == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(lin.b == doctest::Approx(0.0));
}

TEST_CASE("negative quadratic coefficient clamps to a linear fit") {
    // two points where the quadratic term would come out negative
    std::vector<std::pair<double, double>> obs{{1536.0, 20.14}, {4608.0, 59.82}};
    CostParams p = fit_cost(obs);
    CHECK(p.b == 0.0);
    CHECK(p.near_linear);
    CHECK(p.clamped);
    // clamped refit minimizes squared error with the linear term alone
    double expect_a = (1536.0 * 20.14 + 4608.0 * 59.82) / (1536.0 * 1536.0 + 4608.0 * 4608.0);
    CHECK(p.a == doctest::Approx(expect_a).epsilon(1e-12));
}

TEST_CASE("flux calibration predicts the megafusion row within 5 percent") {
    // published: baseline 50 steps 2991, two-stage 25+25 totals 1999
    double per_hi = 2991.0 / 50.0;
    CHECK(per_hi == doctest::Approx(59.82));
    double per_lo = (1999.0 - 25.0 * per_hi) / 25.0;
    CHECK(per_lo == doctest::Approx(20.14).epsilon(1e-3));

    CostParams base;
    CostParams p = fit_cost({{base.tokens_of(512), per_lo}, {base.tokens_of(1024), per_hi}});
    double pred = 30.0 * p.step_cost(512) + 20.0 * p.step_cost(1024);
    CHECK(std::abs(pred - 1825.0) / 1825.0 < 0.05);
}

TEST_CASE("sd35 calibration predicts the megafusion row within 10 percent") {
    double per_hi = 576.0 / 40.0;
    CHECK(per_hi == doctest::Approx(14.4));
    double per_lo = (393.0 - 21.0 * per_hi) / 20.0;
    CHECK(per_lo == doctest::Approx(4.53).epsilon(1e-3));

    CostParams base;
    CostParams p = fit_cost({{base.tokens_of(512), per_lo}, {base.tokens_of(1024), per_hi}});
    CHECK(p.b > 0.0);
    double pred = 24.0 * p.step_cost(512) + 16.0 * p.step_cost(1024);
    CHECK(std::abs(pred - 364.0) / 364.0 < 0.10);
}

TEST_CASE("closed-form speedups for pure laws") {
    StagePlan plan = half_split_plan(1024, 50);

    CostParams quad;
    quad.a = 0.0;
    quad.b = 1.0;
    quad.patch = 16;
    quad.context_tokens = 0;
    CostReport r = predict_plan_cost(quad, plan);
    CHECK(std::abs(r.speedup - 32.0 / 17.0) < 1e-12);

    CostParams lin;
    lin.a = 1.0;
    lin.b = 0.0;
    lin.patch = 16;
    lin.context_tokens = 0;
    CostReport rl = predict_plan_cost(lin, plan);
    CHECK(std::abs(rl.speedup - 1.6) < 1e-12);
}

TEST_CASE("plan cost is additive over stages and monotone in steps") {
    CostParams p;
    p.a = 1.0;
    p.b = 0.001;
    p.patch = 1;
    p.context_tokens = 0;
    StagePlan plan = half_split_plan(32, 16);
    CostReport r = predict_plan_cost(p, plan);

    double manual = 0.0;
    for (const Stage& s : plan.stages) manual += s.executed_steps() * p.step_cost(s.resolution);
    CHECK(r.total == doctest::Approx(manual).epsilon(1e-12));
    CHECK(r.baseline_total == doctest::Approx(16.0 * p.step_cost(32)).epsilon(1e-12));
    CHECK(r.stages.size() == 2);
    CHECK(r.stages[0].tokens == doctest::Approx(256.0));
    CHECK(r.stages[1].tokens == doctest::Approx(1024.0));

    // fewer resumed steps can only lower the total
    StagePlan fewer = plan;
    fewer.stages[1].resume += 2;
    CHECK(predict_plan_cost(p, fewer).total < r.total);
}

TEST_CASE("progressive plans cost less than their baselines") {
    CostParams p;
    p.a = 1.0;
    p.b = 0.001;
    p.patch = 1;
    p.context_tokens = 0;
    for (double sigma : {0.9, 0.75, 0.5}) {
        StagePlan plan = plan_stages(16, 64, 64, 32, sigma, true);
        CostReport r = predict_plan_cost(p, plan);
        CHECK(r.total < r.baseline_total);
        CHECK(r.speedup > 1.0);
    }
}

TEST_CASE("fit input validation") {
    CHECK_THROWS_AS(fit_cost({{100.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_cost({{100.0, 1.0}, {100.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_cost({{-5.0, 1.0}, {100.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("wall time measurement is non-negative") {
    double t = measure_wall_time([] {
        volatile double x = 0.0;
        for (int i = 0; i < 1000; ++i) x += i;
    });
    CHECK(t >= 0.0);
}

TEST_CASE("csv report includes stages and omits unmeasured wall time") {
    CostParams p;
    p.a = 1.0;
    p.b = 0.001;
    p.patch = 1;
    p.context_tokens = 0;
    CostReport r = predict_plan_cost(p, half_split_plan(32, 16));
    std::string path = "/tmp/lss_test_cost_report.csv";
    write_cost_report_csv(path, r);
    std::string text = read_text_file(path);
    CHECK(text.find("resolution,steps,tokens") != std::string::npos);
    CHECK(text.find("speedup") != std::string::npos);
    CHECK(text.find("wall_seconds") == std::string::npos);

    r.wall_seconds = 1.25;
    write_cost_report_csv(path, r);
    CHECK(read_text_file(path).find("wall_seconds") != std::string::npos);
}
