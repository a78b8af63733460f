// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <panosearch/tasks.hpp>

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace panosearch
{

struct EpisodeResult
{
    std::string episode_id;
    TaskType task_type = TaskType::HOS;
    DifficultyLevel difficulty = DifficultyLevel::Easy;
    bool success = false;
    int terminal_step = 0; ///< turns used when the episode ended
    bool errored = false;  ///< transport failure; counted as a failure
};

struct CellStats
{
    int episodes = 0;
    int successes = 0;
    int errors = 0;
    double success_rate = 0.0; ///< percent

    friend bool operator==(const CellStats&, const CellStats&) = default;
};

struct TaskReport
{
    CellStats overall;
    std::map<DifficultyLevel, CellStats> by_difficulty; ///< empty cells are absent
    std::vector<double> cumulative_by_step;             ///< percent, index 0 = step 1

    friend bool operator==(const TaskReport&, const TaskReport&) = default;
};

struct BenchmarkReport
{
    int max_turns = 10;
    std::map<TaskType, TaskReport> tasks;

    friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

/// Success rates by task family and difficulty plus the cumulative success-by-step
/// curve. Input order does not matter: results are sorted by episode id first.
BenchmarkReport aggregate_report(std::span<const EpisodeResult> results, int maxTurns);

nlohmann::json report_to_json(const BenchmarkReport& report);

/// Aligned table with Overall / Easy / Medium / Hard [/ Extreme] columns per task family.
std::string format_report_table(const BenchmarkReport& report);

} // namespace panosearch
