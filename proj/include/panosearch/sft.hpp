// SPDX-License-Identifier: Apache-2.0
#pragma once

// Supervised fine-tuning export: each logged episode becomes one multi-turn
// conversation, rebuilt with the same prompt builder the agents saw, with every
// assistant message labelled by its (think, action) pair.

#include <panosearch/agent.hpp>
#include <panosearch/records.hpp>
#include <panosearch/tasks.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace panosearch
{

struct SftLabel
{
    std::string think;
    Action action;
};

struct SftMessage
{
    Role role = Role::User;
    std::string text;                    ///< images appear as "<image>"
    std::vector<std::string> image_refs; ///< relative to the run directory, in order
    std::optional<SftLabel> label;       ///< assistant messages only
};

struct SftTrajectory
{
    std::string episode_id;
    std::string task_id;
    bool success = false;
    std::vector<SftMessage> messages;
};

struct SftOptions
{
    bool success_only = false;
    PromptOptions prompt;
    /// Images kept per conversation; 0 keeps every observation.
    int history_window = 0;
};

SftTrajectory trajectory_from_record(const EpisodeRecord& record,
                                     const TaskInstance& task,
                                     const std::filesystem::path& runDir,
                                     const SftOptions& options);

nlohmann::json trajectory_to_json(const SftTrajectory& t);

/// Reads runDir/episodes.jsonl, writes `out` (JSONL). Missing observation
/// images throw ResourceError naming the episode. Returns the exported trajectories.
std::vector<SftTrajectory> export_sft(const std::filesystem::path& runDir,
                                      const Dataset& dataset,
                                      const std::filesystem::path& out,
                                      const SftOptions& options = {});

} // namespace panosearch
