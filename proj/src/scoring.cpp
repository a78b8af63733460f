// SPDX-License-Identifier: Apache-2.0
#include <panosearch/action.hpp>
#include <panosearch/errors.hpp>
#include <panosearch/scoring.hpp>

#include <cmath>
#include <numeric>

namespace panosearch
{

bool judge_success(const Direction& submitted, const TaskInstance& task, const ToleranceSpec& spec)
{
    ToleranceSpec effective = spec;
    if (task.task_type == TaskType::HPS)
        effective.pitch_checked = false;
    return in_tolerance_region(submitted, task.target, effective);
}

bool judge_success(const Direction& submitted, const TaskInstance& task)
{
    return judge_success(submitted, task, default_tolerance(task.task_type));
}

double reward_correctness(bool success) noexcept
{
    return success ? kCorrectnessReward : 0.0;
}

double reward_format(std::span<const std::string> responses)
{
    if (responses.empty())
        return 0.0;
    for (auto const& r: responses)
        if (!parse_response(r).well_formed)
            return 0.0;
    return kFormatReward;
}

double reward_distance(const Direction& finalDir, const AngularBox& target, const ToleranceSpec& spec)
{
    auto const tau = effective_tolerance(target, spec);
    double const dYaw = interval_distance(deg_to_rad(finalDir.yaw_deg()), deg_to_rad(target.center().yaw_deg()), deg_to_rad(tau.yaw_deg));
    double const dPitch = linear_interval_distance(
        deg_to_rad(finalDir.pitch_deg()), deg_to_rad(target.center().pitch_deg()), deg_to_rad(tau.pitch_deg));
    return (kPi - dYaw + kPi - dPitch) / (2.0 * kPi);
}

std::string_view to_string(RewardVariant v) noexcept
{
    switch (v)
    {
        case RewardVariant::FormCorr: return "form_corr";
        case RewardVariant::FormCorrDist: return "form_corr_dist";
        case RewardVariant::FormDist: return "form_dist";
    }
    return "form_corr";
}

std::optional<RewardVariant> reward_variant_from_string(std::string_view s) noexcept
{
    for (auto v: {RewardVariant::FormCorr, RewardVariant::FormCorrDist, RewardVariant::FormDist})
        if (to_string(v) == s)
            return v;
    return std::nullopt;
}

RewardVariant default_reward_variant(TaskType t) noexcept
{
    return t == TaskType::HPS ? RewardVariant::FormCorrDist : RewardVariant::FormCorr;
}

RewardBreakdown compose_reward(RewardVariant variant, const RewardParts& parts) noexcept
{
    RewardBreakdown b;
    b.variant = variant;
    b.r_form = parts.r_form;
    switch (variant)
    {
        case RewardVariant::FormCorr:
            b.r_corr = parts.r_corr;
            break;
        case RewardVariant::FormCorrDist:
            b.r_corr = parts.r_corr;
            b.r_dist = parts.r_dist;
            break;
        case RewardVariant::FormDist:
            b.r_dist = parts.r_dist;
            break;
    }
    b.total = b.r_form + b.r_corr + b.r_dist;
    return b;
}

std::vector<double> grpo_advantages(std::span<const double> rewards, const GrpoConfig& cfg)
{
    if (cfg.group_size < 2)
        throw InvalidArgument("GRPO group size must be at least 2");
    if (rewards.size() != static_cast<std::size_t>(cfg.group_size))
        throw InvalidArgument("reward count does not match the GRPO group size");

    auto const n = static_cast<double>(rewards.size());
    double const mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double sq = 0.0;
    for (double r: rewards)
        sq += (r - mean) * (r - mean);
    double const stddev = std::sqrt(sq / n);

    std::vector<double> out(rewards.size(), 0.0);
    if (stddev < cfg.std_floor)
        return out;
    for (std::size_t i = 0; i < rewards.size(); ++i)
        out[i] = (rewards[i] - mean) / stddev;
    return out;
}

} // namespace panosearch
