#include <cmath>

#include "doctest.h"
#include "lss/rng.hpp"
#include "lss/schedule.hpp"

using namespace lss;

TEST_CASE("snr and sigma are inverse maps") {
    CHECK(snr_of_sigma(0.5) == doctest::Approx(1.0));
    CHECK(sigma_of_snr(1.0) == doctest::Approx(0.5));
    CHECK(sigma_of_snr(0.0) == 1.0);
    for (int i = 1; i <= 99; ++i) {
        double sigma = i / 100.0;
        CHECK(std::abs(sigma_of_snr(snr_of_sigma(sigma)) - sigma) < 1e-12);
    }
    CHECK_THROWS(snr_of_sigma(0.0));
    CHECK_THROWS(snr_of_sigma(1.0));
    CHECK_THROWS(snr_of_sigma(-0.5));
    CHECK_THROWS(sigma_of_snr(-1.0));
}

TEST_CASE("shift_time fixes endpoints, is monotone and composes") {
    Rng rng(17);
    for (int rep = 0; rep < 1000; ++rep) {
        double s1 = 1.0 + 7.0 * rng.uniform();
        double s2 = 1.0 + 7.0 * rng.uniform();
        double t = rng.uniform();
        CHECK(shift_time(0.0, s1) == 0.0);
        CHECK(shift_time(1.0, s1) == 1.0);
        double once = shift_time(shift_time(t, s1), s2);
        double combined = shift_time(t, s1 * s2);
        CHECK(std::abs(once - combined) < 1e-12);
    }
    for (int rep = 0; rep < 200; ++rep) {
        double s = 1.0 + 7.0 * rng.uniform();
        double a = rng.uniform(), b = rng.uniform();
        if (a > b) std::swap(a, b);
        CHECK(shift_time(a, s) <= shift_time(b, s));
    }
    CHECK(shift_time(0.5, 2.0) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS(shift_time(0.5, 0.5));
    CHECK_THROWS(shift_time(1.5, 2.0));
}

TEST_CASE("build_schedule grids") {
    NoiseSchedule uniform = build_schedule(4, 64, 64, false);
    REQUIRE(uniform.times.size() == 5);
    for (int i = 0; i <= 4; ++i) CHECK(uniform.times[i] == doctest::Approx(1.0 - i / 4.0));
    CHECK(uniform.times.front() == 1.0);
    CHECK(uniform.times.back() == 0.0);

    NoiseSchedule shifted = build_schedule(2, 128, 64, true);
    REQUIRE(shifted.times.size() == 3);
    CHECK(shifted.shift == 2.0);
    CHECK(shifted.times[0] == 1.0);
    CHECK(shifted.times[1] == doctest::Approx(2.0 / 3.0));
    CHECK(shifted.times[2] == 0.0);

    // at or below base resolution the grid stays uniform
    NoiseSchedule same = build_schedule(4, 64, 64, true);
    CHECK(same.shift == 1.0);
    NoiseSchedule below = build_schedule(4, 32, 64, true);
    CHECK(below.shift == 1.0);

    NoiseSchedule side = build_schedule(2, 256, 64, true, ShiftConvention::SideLength);
    CHECK(side.shift == doctest::Approx(2.0));

    CHECK_THROWS(build_schedule(0, 64, 64, false));
}

TEST_CASE("resume_index picks the first grid time at or below sigma_init") {
    NoiseSchedule s50 = build_schedule(50, 1024, 1024, false);
    CHECK(resume_index(s50, 0.75) == 13);
    CHECK(s50.steps() - resume_index(s50, 0.75) == 37);

    NoiseSchedule s4 = build_schedule(4, 1024, 1024, false);
    CHECK(resume_index(s4, 0.75) == 1);
    CHECK(s4.steps() - resume_index(s4, 0.75) == 3);

    CHECK(resume_index(s50, 1.0) == 0);
    CHECK_THROWS(resume_index(s50, 0.0));
    CHECK_THROWS(resume_index(s50, 1.5));
}

TEST_CASE("plan_stages shortening and resumption") {
    StagePlan plan = plan_stages(512, 1024, 1024, 4, 0.75, true);
    REQUIRE(plan.stages.size() == 2);
    CHECK(plan.stages[0].resolution == 512);
    CHECK(plan.stages[0].steps == 2);
    CHECK(plan.stages[0].sigma_init == 1.0);
    CHECK(plan.stages[0].resume == 0);
    CHECK(plan.stages[0].executed_steps() == 2);
    CHECK(plan.stages[1].resolution == 1024);
    CHECK(plan.stages[1].steps == 4);
    CHECK(plan.stages[1].resume == 1);
    CHECK(plan.stages[1].executed_steps() == 3);

    StagePlan p50 = plan_stages(512, 1024, 1024, 50, 0.75, true);
    CHECK(p50.stages[0].steps == 25);
    CHECK(p50.stages[1].executed_steps() == 37);

    StagePlan noshort = plan_stages(512, 1024, 1024, 50, 0.75, false);
    CHECK(noshort.stages[0].steps == 50);
    CHECK(noshort.stages[1].executed_steps() == 37);

    StagePlan three = plan_stages(16, 64, 64, 8, 0.75, true);
    REQUIRE(three.stages.size() == 3);
    CHECK(three.stages[0].steps == 2);
    CHECK(three.stages[1].steps == 4);
    CHECK(three.stages[2].steps == 8);

    StagePlan single = plan_stages(64, 64, 64, 10, 0.75, true);
    REQUIRE(single.stages.size() == 1);
    CHECK(single.stages[0].steps == 10);
    CHECK(single.stages[0].resume == 0);
}

TEST_CASE("plan_stages total work is monotone in sigma_init") {
    int prev = 1 << 30;
    for (double sigma : {0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3}) {
        StagePlan plan = plan_stages(512, 1024, 1024, 50, sigma, true);
        int total = 0;
        for (const Stage& st : plan.stages) total += st.executed_steps();
        CHECK(total < prev);
        prev = total;
    }
}

TEST_CASE("plan_stages stage overrides and validation") {
    StagePlan plan = plan_stages(512, 1024, 1024, 50, 0.75, true, false,
                                 ShiftConvention::PixelCount, {25, 25});
    // overrides pin the executed counts, so the published "25, 25" split
    // survives resume trimming
    CHECK(plan.stages[0].executed_steps() == 25);
    CHECK(plan.stages[1].executed_steps() == 25);
    CHECK(plan.stages[1].resume == 0);
    CHECK(plan.stages[1].overridden);

    // the overridden resumed stage re-grids from sigma_init straight to 0
    NoiseSchedule sched = stage_schedule(plan, 1, false);
    REQUIRE(sched.times.size() == 26);
    CHECK(sched.times.front() == doctest::Approx(0.75));
    CHECK(sched.times.back() == 0.0);
    NoiseSchedule first = stage_schedule(plan, 0, false);
    CHECK(first.times.front() == 1.0);
    CHECK(first.steps() == 25);

    CHECK_THROWS(plan_stages(512, 1024, 1024, 50, 0.75, true, false,
                             ShiftConvention::PixelCount, {25}));
    CHECK_THROWS(plan_stages(500, 1024, 1024, 50, 0.75, true));
    CHECK_THROWS(plan_stages(512, 1024, 1024, 0, 0.75, true));
}

TEST_CASE("shifting the later stage grid trims more resumed steps") {
    StagePlan off = plan_stages(16, 32, 16, 16, 0.75, false, false);
    StagePlan on = plan_stages(16, 32, 16, 16, 0.75, false, true);
    CHECK(on.stages[1].resume >= off.stages[1].resume);
    NoiseSchedule sched = stage_schedule(on, 1, true);
    CHECK(sched.shift == 2.0);
    CHECK(sched.times[on.stages[1].resume] <= 0.75);
}

TEST_CASE("sigma_after_upscale rules") {
    SigmaRescale full = sigma_after_upscale(1.0, 2.0);
    CHECK(full.linear_rule == doctest::Approx(0.75));
    CHECK(full.exact_vp == doctest::Approx(1.0));

    SigmaRescale half = sigma_after_upscale(0.5, 2.0);
    CHECK(half.linear_rule == doctest::Approx(0.375));
    CHECK(half.exact_vp == doctest::Approx(2.0 / 3.0));

    SigmaRescale same = sigma_after_upscale(0.6, 1.0);
    CHECK(same.linear_rule == doctest::Approx(0.6));
    CHECK(same.exact_vp == doctest::Approx(0.6));

    // two x2 upscales equal one x4 upscale under the linear rule
    double twice = sigma_after_upscale(sigma_after_upscale(0.8, 2.0).linear_rule, 2.0).linear_rule;
    CHECK(twice == doctest::Approx(sigma_after_upscale(0.8, 4.0).linear_rule));

    // exact rule agrees with dividing the SNR by s^2
    double sigma = 0.37, s = 2.0;
    CHECK(sigma_after_upscale(sigma, s).exact_vp ==
          doctest::Approx(sigma_of_snr(snr_of_sigma(sigma) / (s * s))).epsilon(1e-12));

    CHECK_THROWS(sigma_after_upscale(0.0, 2.0));
    CHECK_THROWS(sigma_after_upscale(0.5, 0.5));
}
