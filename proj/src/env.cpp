// SPDX-License-Identifier: Apache-2.0
#include <panosearch/env.hpp>
#include <panosearch/errors.hpp>
#include <panosearch/scoring.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace panosearch
{

void EpisodeConfig::validate() const
{
    if (max_turns < 1)
        throw InvalidArgument("max_turns must be at least 1");
    if (history_window < 1)
        throw InvalidArgument("history_window must be at least 1");
}

std::string_view to_string(TerminationReason r) noexcept
{
    switch (r)
    {
        case TerminationReason::None: return "none";
        case TerminationReason::Submitted: return "submitted";
        case TerminationReason::TurnCap: return "turn_cap";
    }
    return "none";
}

ToleranceSpec EpisodeState::tolerance() const
{
    return config.tolerance.value_or(default_tolerance(task.task_type));
}

std::pair<int, int> reported_angles(const Direction& d)
{
    auto yaw = static_cast<int>(std::lround(d.yaw_deg())) % 360;
    auto const pitch = static_cast<int>(std::lround(d.pitch_deg()));
    return {yaw, pitch};
}

std::string rotate_feedback(const Direction& d)
{
    auto const [yaw, pitch] = reported_angles(d);
    return fmt::format("Last action is executed successfully, your current direction (yaw,pitch) is ({},{}).", yaw, pitch);
}

Observation make_observation(const Panorama& pano, const EpisodeState& state, std::string feedback)
{
    Observation obs;
    obs.direction = state.current;
    obs.turn = state.turn;
    obs.done = state.done();
    obs.feedback_text = std::move(feedback);
    if (state.config.render_observations)
        obs.image = overlay_crosshair(render_view(pano, state.current, state.config.view));
    else
        obs.image = ViewImage {{}, state.current, state.config.view, false};
    return obs;
}

std::pair<EpisodeState, Observation> reset(
    const TaskInstance& task, std::size_t startIndex, const EpisodeConfig& config, const Panorama& pano)
{
    config.validate();
    if (startIndex >= task.start_orientations.size())
        throw InvalidArgument("start index out of range");

    EpisodeState state;
    state.task = task;
    state.start_index = startIndex;
    state.config = config;
    state.current = task.start_orientations[startIndex];
    auto obs = make_observation(pano, state, {});
    return {std::move(state), std::move(obs)};
}

Observation step(EpisodeState& state, const Action& action, const Panorama& pano, std::string responseText)
{
    if (state.done())
        throw InvalidState("episode already terminated");

    HistoryEntry entry;
    entry.observed_direction = state.current;
    entry.observed_feedback = state.last_feedback;
    entry.response_text = std::move(responseText);
    entry.action = action;

    std::string feedback;
    ++state.turn;

    if (auto const* rotate = std::get_if<Rotate>(&action))
    {
        state.current = state.current.rotated(rotate->dyaw_deg, rotate->dpitch_deg);
        feedback = rotate_feedback(state.current);
    }
    else if (std::holds_alternative<Submit>(action))
    {
        // submit arguments are echoes; the current view is what gets judged
        state.success = judge_success(state.current, state.task, state.tolerance());
        state.status = EpisodeStatus::Terminated;
        state.reason = TerminationReason::Submitted;
        feedback = state.success ? "Success" : "Failure";
    }
    else
    {
        feedback = std::string(kInvalidActionFeedback);
    }

    if (!state.done() && state.turn >= state.config.max_turns)
    {
        state.status = EpisodeStatus::Terminated;
        state.reason = TerminationReason::TurnCap;
        state.success = false;
    }

    entry.feedback = feedback;
    entry.result_direction = state.current;
    entry.turn = state.turn;
    state.history.push_back(std::move(entry));
    state.last_feedback = feedback;

    return make_observation(pano, state, std::move(feedback));
}

std::span<const HistoryEntry> visible_history(const EpisodeState& state, int window)
{
    if (window < 1)
        throw InvalidArgument("history window must be at least 1");
    std::span<const HistoryEntry> all(state.history);
    auto const n = std::min(all.size(), static_cast<std::size_t>(window));
    return all.subspan(all.size() - n);
}

Panorama load_task_panorama(const Dataset& ds, const TaskInstance& task)
{
    auto const path = ds.panorama_path(task);
    if (!std::filesystem::is_regular_file(path))
        throw ResourceError("panorama for task '" + task.id + "' not found: " + path.string());
    return Panorama::load(path, task.panorama_ref);
}

} // namespace panosearch
