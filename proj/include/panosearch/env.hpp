// SPDX-License-Identifier: Apache-2.0
#pragma once

// Closed-loop search episode over a single panorama.
//
//   reset() -> observation at the chosen start orientation, turn 0
//   step()  -> rotate: yaw wraps, pitch clamps, turn + 1
//              submit: judged at the *current* direction, episode ends
//              invalid: turn + 1, direction unchanged
// The episode also ends, as a failure, when the turn counter reaches max_turns.

#include <panosearch/action.hpp>
#include <panosearch/projection.hpp>
#include <panosearch/tasks.hpp>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace panosearch
{

enum class InvalidActionPolicy
{
    ConsumeTurnAndReport,
};

struct EpisodeConfig
{
    int max_turns = 10;
    ViewSpec view = ViewSpec::evaluation();
    int history_window = 5;
    InvalidActionPolicy invalid_action_policy = InvalidActionPolicy::ConsumeTurnAndReport;
    /// Overrides the task family's default tolerances when set.
    std::optional<ToleranceSpec> tolerance;
    /// When false observations carry no raster (direction and feedback only).
    bool render_observations = true;

    void validate() const;
};

enum class EpisodeStatus
{
    Running,
    Terminated,
};

enum class TerminationReason
{
    None,
    Submitted,
    TurnCap,
};

std::string_view to_string(TerminationReason r) noexcept;

struct Observation
{
    ViewImage image; ///< crosshair drawn (empty raster when rendering is disabled)
    std::string feedback_text;
    Direction direction;
    int turn = 0;
    bool done = false;
};

struct HistoryEntry
{
    Direction observed_direction; ///< where the agent was looking when it acted
    std::string observed_feedback; ///< feedback shown with that observation
    std::string response_text;
    Action action;
    std::string feedback;      ///< environment feedback produced by the action
    Direction result_direction;
    int turn = 0;              ///< 1-based turn this entry completed
};

struct EpisodeState
{
    TaskInstance task;
    std::size_t start_index = 0;
    EpisodeConfig config;
    Direction current;
    int turn = 0;
    std::vector<HistoryEntry> history;
    EpisodeStatus status = EpisodeStatus::Running;
    TerminationReason reason = TerminationReason::None;
    bool success = false;
    std::string last_feedback;

    [[nodiscard]] bool done() const noexcept { return status == EpisodeStatus::Terminated; }
    [[nodiscard]] ToleranceSpec tolerance() const;
};

inline constexpr std::string_view kInvalidActionFeedback =
    "Invalid action. Please answer with exactly one action in the format "
    "<think>...</think><answer>...</answer>, using rotate(yaw:int,pitch:int) or submit(yaw:int,pitch:int).";

/// "Last action is executed successfully, your current direction (yaw,pitch) is (Y,P)."
std::string rotate_feedback(const Direction& d);

/// Integer (yaw, pitch) as reported to agents: rounded, yaw folded back into [0, 360).
std::pair<int, int> reported_angles(const Direction& d);

Observation make_observation(const Panorama& pano, const EpisodeState& state, std::string feedback);

std::pair<EpisodeState, Observation> reset(
    const TaskInstance& task, std::size_t startIndex, const EpisodeConfig& config, const Panorama& pano);

/// Advances the episode by one action. Throws InvalidState once the episode has ended.
Observation step(EpisodeState& state, const Action& action, const Panorama& pano, std::string responseText = {});

/// The last min(window, turns) history entries, oldest first.
std::span<const HistoryEntry> visible_history(const EpisodeState& state, int window);

/// Loads the task's panorama relative to the dataset; throws ResourceError when missing.
Panorama load_task_panorama(const Dataset& ds, const TaskInstance& task);

} // namespace panosearch
