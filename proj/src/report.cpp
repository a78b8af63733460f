// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/report.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cctype>

namespace panosearch
{

namespace
{

void finish(CellStats& c)
{
    c.success_rate = c.episodes == 0 ? 0.0 : 100.0 * c.successes / c.episodes;
}

void count(CellStats& c, const EpisodeResult& r)
{
    ++c.episodes;
    if (r.success && !r.errored)
        ++c.successes;
    if (r.errored)
        ++c.errors;
}

std::vector<DifficultyLevel> columns_for(TaskType t)
{
    if (t == TaskType::HOS)
        return {DifficultyLevel::Easy, DifficultyLevel::Medium, DifficultyLevel::Hard};
    return {DifficultyLevel::Easy, DifficultyLevel::Medium, DifficultyLevel::Hard, DifficultyLevel::Extreme};
}

} // namespace

BenchmarkReport aggregate_report(std::span<const EpisodeResult> results, int maxTurns)
{
    if (maxTurns < 1)
        throw InvalidArgument("max_turns must be at least 1");

    std::vector<const EpisodeResult*> sorted;
    sorted.reserve(results.size());
    for (auto const& r: results)
        sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->episode_id < b->episode_id; });

    BenchmarkReport report;
    report.max_turns = maxTurns;
    std::map<TaskType, std::vector<int>> successAtStep;

    for (auto const* r: sorted)
    {
        auto& task = report.tasks[r->task_type];
        count(task.overall, *r);
        count(task.by_difficulty[r->difficulty], *r);
        auto& steps = successAtStep[r->task_type];
        steps.resize(static_cast<std::size_t>(maxTurns), 0);
        if (r->success && !r->errored && r->terminal_step >= 1)
            ++steps[static_cast<std::size_t>(std::min(r->terminal_step, maxTurns) - 1)];
    }

    for (auto& [type, task]: report.tasks)
    {
        finish(task.overall);
        for (auto& [level, cell]: task.by_difficulty)
            finish(cell);
        auto const& steps = successAtStep[type];
        task.cumulative_by_step.assign(static_cast<std::size_t>(maxTurns), 0.0);
        int running = 0;
        for (std::size_t s = 0; s < steps.size(); ++s)
        {
            running += steps[s];
            task.cumulative_by_step[s] = 100.0 * running / task.overall.episodes;
        }
    }
    return report;
}

nlohmann::json report_to_json(const BenchmarkReport& report)
{
    auto cell_json = [](const CellStats& c) {
        return nlohmann::json {
            {"episodes", c.episodes},
            {"successes", c.successes},
            {"errors", c.errors},
            {"success_rate", c.success_rate},
        };
    };

    nlohmann::json tasks = nlohmann::json::object();
    for (auto const& [type, task]: report.tasks)
    {
        nlohmann::json cells = nlohmann::json::object();
        for (auto const& [level, cell]: task.by_difficulty)
            cells[std::string(to_string(level))] = cell_json(cell);
        tasks[std::string(to_string(type))] = {
            {"overall", cell_json(task.overall)},
            {"by_difficulty", std::move(cells)},
            {"cumulative_by_step", task.cumulative_by_step},
        };
    }
    return {{"max_turns", report.max_turns}, {"tasks", std::move(tasks)}};
}

std::string format_report_table(const BenchmarkReport& report)
{
    std::string out;
    for (auto const& [type, task]: report.tasks)
    {
        auto const levels = columns_for(type);
        out += fmt::format("{:<6}{:>10}", to_string(type), "Overall");
        for (auto level: levels)
        {
            std::string name(to_string(level));
            name.front() = static_cast<char>(std::toupper(name.front()));
            out += fmt::format("{:>10}", name);
        }
        out += fmt::format("{:>10}{:>8}\n", "Episodes", "Errors");

        out += fmt::format("{:<6}{:>10.2f}", "", task.overall.success_rate);
        for (auto level: levels)
        {
            auto it = task.by_difficulty.find(level);
            if (it == task.by_difficulty.end())
                out += fmt::format("{:>10}", "-");
            else
                out += fmt::format("{:>10.2f}", it->second.success_rate);
        }
        out += fmt::format("{:>10}{:>8}\n", task.overall.episodes, task.overall.errors);

        out += fmt::format("{:<6}", "cum.");
        for (std::size_t s = 0; s < task.cumulative_by_step.size(); ++s)
            out += fmt::format("{}{}:{:.1f}", s == 0 ? "" : " ", s + 1, task.cumulative_by_step[s]);
        out += "\n\n";
    }
    return out;
}

} // namespace panosearch
