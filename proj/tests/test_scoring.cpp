// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <panosearch/errors.hpp>
#include <panosearch/report.hpp>
#include <panosearch/scoring.hpp>

#include <doctest.h>

#include <numeric>

using namespace panosearch;
using pstest::Gen;
using pstest::make_task;

TEST_CASE("judge_success examples")
{
    auto const hos = make_task(TaskType::HOS, AngularBox(Direction(0, 0), 10, 10));
    CHECK(judge_success(Direction(25, -15), hos));
    CHECK_FALSE(judge_success(Direction(31, 0), hos));
    CHECK(judge_success(Direction(0, 0), hos));

    auto const hps = make_task(TaskType::HPS, AngularBox(Direction(350, -30), 4, 40));
    CHECK(judge_success(Direction(357, -60), hps));
    CHECK(judge_success(Direction(350, -30), hps));
    CHECK_FALSE(judge_success(Direction(1, -30), hps));
    // pitch stays ignored for path search even if a caller passes a checking spec
    CHECK(judge_success(Direction(357, 80), hps, ToleranceSpec {10, 0, true}));
}

TEST_CASE("judge_success is equivariant under a common yaw shift")
{
    Gen g(30);
    for (int i = 0; i < 1000; ++i)
    {
        auto const box = g.box();
        auto const d = g.direction();
        double const shift = g.real(-360, 360);
        auto const t1 = make_task(TaskType::HOS, box);
        auto const t2 = make_task(TaskType::HOS, AngularBox(box.center().rotated(shift, 0), box.width_deg(), box.height_deg()));
        // skip draws that land within rounding distance of the boundary
        auto const tau = effective_tolerance(box, ToleranceSpec::object_search());
        if (std::fabs(std::fabs(angular_diff(d.yaw_deg(), box.center().yaw_deg())) - tau.yaw_deg) < 1e-9)
            continue;
        REQUIRE(judge_success(d, t1) == judge_success(d.rotated(shift, 0), t2));
    }
}

TEST_CASE("correctness and format rewards")
{
    CHECK(reward_correctness(true) == 0.5);
    CHECK(reward_correctness(false) == 0.0);

    std::vector<std::string> good {"<think>a</think><answer>rotate(10,0)</answer>"};
    CHECK(reward_format(good) == 0.5);
    std::vector<std::string> five(5, good[0]);
    CHECK(reward_format(five) == 0.5);
    five[3] = "<think>a</think><answer>rotate(10.5,0)</answer>";
    CHECK(reward_format(five) == 0.0);
    CHECK(reward_format(std::vector<std::string> {"rotate(10,0)"}) == 0.0);
    CHECK(reward_format(std::vector<std::string> {}) == 0.0);
}

TEST_CASE("distance reward golden values")
{
    ToleranceSpec const zero {0, 0, true};
    AngularBox const tiny(Direction(40, 10), 1e-9, 1e-9);
    CHECK(reward_distance(Direction(40, 10), tiny, zero) == doctest::Approx(1.0).epsilon(1e-9));

    // antipodal in yaw and reflected in pitch
    CHECK(reward_distance(Direction(180, -90), AngularBox(Direction(0, 90), 1e-9, 1e-9), zero) ==
          doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(reward_distance(Direction(180, -30), AngularBox(Direction(0, 30), 1e-9, 1e-9), zero) ==
          doctest::Approx(-1.0 / 3.0).epsilon(1e-9));

    // inside with equal tolerance tau on both axes: 1 - 2 tau / pi (tau in radians)
    double const tau = 12.0;
    AngularBox const box(Direction(200, 0), 2 * tau, 2 * tau);
    CHECK(reward_distance(Direction(205, -3), box, zero) ==
          doctest::Approx(1.0 - 2.0 * deg_to_rad(tau) / kPi).epsilon(1e-12));
}

TEST_CASE("distance reward is flat over the box and decreasing outside")
{
    Gen g(31);
    for (int trial = 0; trial < 50; ++trial)
    {
        auto const box = g.box();
        ToleranceSpec const spec {g.real(0, 30), g.real(0, 20), true};
        auto const tau = effective_tolerance(box, spec);
        double const top = reward_distance(box.center(), box, spec);
        CHECK(top == doctest::Approx(1.0 - deg_to_rad(tau.yaw_deg + tau.pitch_deg) / kPi).epsilon(1e-12));

        for (int i = 0; i <= 20; ++i)
            for (int j = 0; j <= 20; ++j)
            {
                double const pitch = box.center().pitch_deg() + (j / 10.0 - 1.0) * tau.pitch_deg;
                if (pitch < -90 || pitch > 90)
                    continue;
                Direction const d(box.center().yaw_deg() + (i / 10.0 - 1.0) * tau.yaw_deg, pitch);
                REQUIRE(reward_distance(d, box, spec) == doctest::Approx(top).epsilon(1e-12));
            }

        // outside along yaw: strictly decreasing until the antipode
        double prev = top;
        for (double off = tau.yaw_deg + 0.5; off < 180.0; off += 0.5)
        {
            double const r = reward_distance(box.center().rotated(off, 0), box, spec);
            REQUIRE(r < prev);
            prev = r;
        }
        // outside along pitch
        prev = top;
        for (double p = box.center().pitch_deg() + tau.pitch_deg + 0.5; p <= 90.0; p += 0.5)
        {
            double const r = reward_distance(Direction(box.center().yaw_deg(), p), box, spec);
            REQUIRE(r < prev);
            prev = r;
        }
    }
}

TEST_CASE("reward variants compose exactly")
{
    RewardParts const p {0.5, 0.5, 0.8};
    auto b = compose_reward(RewardVariant::FormCorr, p);
    CHECK(b.total == 1.0);
    CHECK(b.r_dist == 0.0);
    b = compose_reward(RewardVariant::FormDist, p);
    CHECK(b.total == doctest::Approx(1.3).epsilon(1e-15));
    CHECK(b.r_corr == 0.0);
    b = compose_reward(RewardVariant::FormCorrDist, p);
    CHECK(b.total == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(compose_reward(RewardVariant::FormCorr, {}).total == 0.0);

    CHECK(default_reward_variant(TaskType::HOS) == RewardVariant::FormCorr);
    CHECK(default_reward_variant(TaskType::HPS) == RewardVariant::FormCorrDist);
    CHECK(reward_variant_from_string("form_dist") == RewardVariant::FormDist);
    CHECK_FALSE(reward_variant_from_string("dist").has_value());
}

TEST_CASE("GRPO advantages")
{
    GrpoConfig cfg;
    cfg.group_size = 2;
    CHECK(grpo_advantages(std::vector<double> {1.0, 0.0}, cfg) == std::vector<double> {1.0, -1.0});
    cfg.group_size = 4;
    CHECK(grpo_advantages(std::vector<double> {1, 1, 0, 0}, cfg) == std::vector<double> {1, 1, -1, -1});
    CHECK(grpo_advantages(std::vector<double> {0.3, 0.3, 0.3, 0.3}, cfg) == std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(grpo_advantages(std::vector<double> {1, 0}, cfg), InvalidArgument);
    cfg.group_size = 1;
    CHECK_THROWS_AS(grpo_advantages(std::vector<double> {1}, cfg), InvalidArgument);

    Gen g(32);
    for (int n = 2; n <= 64; ++n)
    {
        cfg.group_size = n;
        std::vector<double> r(static_cast<std::size_t>(n));
        for (auto& x: r)
            x = g.coin(0.3) ? 0.5 * g.integer(0, 3) : g.real(-1, 2);
        r[0] = 0.0;
        r[1] = 1.0; // non-degenerate
        auto const a = grpo_advantages(r, cfg);
        double const mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
        double sq = 0;
        for (double x: a)
            sq += (x - mean) * (x - mean);
        CHECK(std::fabs(mean) < 1e-12);
        CHECK(std::fabs(std::sqrt(sq / n) - 1.0) < 1e-9);
    }
}

TEST_CASE("report cells and cumulative curve")
{
    std::vector<EpisodeResult> results {
        {"e1", TaskType::HOS, DifficultyLevel::Easy, true, 2, false},
        {"e2", TaskType::HOS, DifficultyLevel::Easy, false, 10, false},
        {"e3", TaskType::HOS, DifficultyLevel::Hard, true, 5, false},
        {"e4", TaskType::HOS, DifficultyLevel::Hard, false, 3, true},
        {"e5", TaskType::HPS, DifficultyLevel::Extreme, false, 10, false},
    };
    auto const r = aggregate_report(results, 10);
    auto const& hos = r.tasks.at(TaskType::HOS);
    CHECK(hos.overall.episodes == 4);
    CHECK(hos.overall.success_rate == 50.0);
    CHECK(hos.overall.errors == 1);
    CHECK(hos.by_difficulty.at(DifficultyLevel::Easy).success_rate == 50.0);
    CHECK_FALSE(hos.by_difficulty.contains(DifficultyLevel::Medium));
    CHECK(hos.cumulative_by_step == std::vector<double> {0, 25, 25, 25, 50, 50, 50, 50, 50, 50});
    auto const& hps = r.tasks.at(TaskType::HPS);
    CHECK(hps.overall.success_rate == 0.0);
    CHECK(hps.cumulative_by_step == std::vector<double>(10, 0.0));

    // order of the input does not matter
    std::reverse(results.begin(), results.end());
    CHECK(aggregate_report(results, 10) == r);

    auto const table = format_report_table(r);
    CHECK(table.find("Overall") != std::string::npos);
    CHECK(table.find("Extreme") != std::string::npos);
    auto const j = report_to_json(r);
    CHECK(j["tasks"]["HOS"]["by_difficulty"]["easy"]["success_rate"] == 50.0);
    CHECK_THROWS_AS(aggregate_report(results, 0), InvalidArgument);
}

TEST_CASE("three of four succeed")
{
    std::vector<EpisodeResult> results;
    for (int i = 0; i < 4; ++i)
        results.push_back({"e" + std::to_string(i), TaskType::HPS, DifficultyLevel::Medium, i != 2, 1, false});
    CHECK(aggregate_report(results, 10).tasks.at(TaskType::HPS).by_difficulty.at(DifficultyLevel::Medium).success_rate ==
          75.0);
}
