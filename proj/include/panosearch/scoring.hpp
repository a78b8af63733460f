// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <panosearch/geometry.hpp>
#include <panosearch/tasks.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace panosearch
{

/// Success iff the submitted direction lies in the target's tolerance region.
/// HPS ignores pitch.
bool judge_success(const Direction& submitted, const TaskInstance& task, const ToleranceSpec& spec);
bool judge_success(const Direction& submitted, const TaskInstance& task);

inline constexpr double kCorrectnessReward = 0.5;
inline constexpr double kFormatReward = 0.5;

double reward_correctness(bool success) noexcept;

/// 0.5 iff every response of the trajectory is a well-formed think/answer pair.
double reward_format(std::span<const std::string> responses);

/// Distance-to-goal reward at the final direction:
///   (pi - d(yaw, yaw*) + pi - d(pitch, pitch*)) / (2 pi)
/// with d the interval distance using the effective tolerances (radians).
double reward_distance(const Direction& finalDir, const AngularBox& target, const ToleranceSpec& spec);

enum class RewardVariant
{
    FormCorr,
    FormCorrDist,
    FormDist,
};

std::string_view to_string(RewardVariant v) noexcept;
std::optional<RewardVariant> reward_variant_from_string(std::string_view s) noexcept;

/// Default per task family: form+corr for HOS, form+corr+dist for HPS.
RewardVariant default_reward_variant(TaskType t) noexcept;

struct RewardParts
{
    double r_corr = 0.0;
    double r_form = 0.0;
    double r_dist = 0.0;
};

/// Contributions actually counted by the variant; unused parts are stored as 0.
struct RewardBreakdown
{
    double r_corr = 0.0;
    double r_form = 0.0;
    double r_dist = 0.0;
    double total = 0.0;
    RewardVariant variant = RewardVariant::FormCorr;

    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

RewardBreakdown compose_reward(RewardVariant variant, const RewardParts& parts) noexcept;

struct GrpoConfig
{
    int group_size = 8;
    double clip_epsilon = 0.2; ///< carried for the external trainer
    double kl_beta = 0.01;     ///< carried for the external trainer
    double std_floor = 1e-8;
};

/// Group-relative advantages (r - mean) / std with the population std.
/// A group whose std falls below `std_floor` gets all-zero advantages.
std::vector<double> grpo_advantages(std::span<const double> rewards, const GrpoConfig& cfg);

} // namespace panosearch
