// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/sft.hpp>

#include <fstream>
#include <limits>

namespace panosearch
{

SftTrajectory trajectory_from_record(const EpisodeRecord& record,
                                     const TaskInstance& task,
                                     const std::filesystem::path& runDir,
                                     const SftOptions& options)
{
    if (record.task_id != task.id)
        throw InvalidArgument("record " + record.episode_id + " belongs to task " + record.task_id);

    std::vector<std::string> paths;
    paths.push_back(record.initial_image_path);
    for (auto const& e: record.entries)
        paths.push_back(e.image_path);
    for (std::size_t t = 0; t + 1 < paths.size(); ++t)
    {
        // the last observation is never shown to the agent
        if (paths[t].empty() || !std::filesystem::is_regular_file(runDir / paths[t]))
            throw ResourceError("episode " + record.episode_id + ": missing observation image for turn "
                                + std::to_string(t));
    }

    auto const history = history_from_record(record);
    PromptRequest req;
    req.task = &task;
    req.history = history;
    req.current_turn = static_cast<int>(history.size());
    req.history_window = options.history_window > 0 ? options.history_window : std::numeric_limits<int>::max();
    req.options = options.prompt;
    req.include_pending_user = false;
    req.images = [&paths](int t) { return ImageRef {paths[static_cast<std::size_t>(t)], nullptr}; };

    SftTrajectory out;
    out.episode_id = record.episode_id;
    out.task_id = record.task_id;
    out.success = record.terminal && record.terminal->success;

    for (auto const& m: build_prompt(req))
    {
        SftMessage msg;
        msg.role = m.role;
        msg.text = m.text();
        for (auto const& p: m.parts)
            if (p.kind == ContentPart::Kind::Image)
                msg.image_refs.push_back(p.image.path);
        if (m.role == Role::Assistant)
        {
            auto parsed = parse_response(msg.text);
            msg.label = SftLabel {parsed.think_text, parsed.action};
        }
        out.messages.push_back(std::move(msg));
    }
    return out;
}

nlohmann::json trajectory_to_json(const SftTrajectory& t)
{
    auto messages = nlohmann::json::array();
    for (auto const& m: t.messages)
    {
        nlohmann::json j = {
            {"role", std::string(to_string(m.role))},
            {"text", m.text},
            {"image_refs", m.image_refs},
        };
        if (m.label)
            j["labels"] = {{"think", m.label->think}, {"action", action_to_json(m.label->action)}};
        messages.push_back(std::move(j));
    }
    return {
        {"episode_id", t.episode_id},
        {"task_id", t.task_id},
        {"success", t.success},
        {"messages", std::move(messages)},
    };
}

std::vector<SftTrajectory> export_sft(const std::filesystem::path& runDir,
                                      const Dataset& dataset,
                                      const std::filesystem::path& out,
                                      const SftOptions& options)
{
    auto const records = load_records(runDir / "episodes.jsonl");
    std::vector<SftTrajectory> trajectories;
    for (auto const& r: records)
    {
        if (!r.terminal || r.terminal->errored)
            continue;
        if (options.success_only && !r.terminal->success)
            continue;
        auto const* task = dataset.find(r.task_id);
        if (task == nullptr)
            throw ResourceError("episode " + r.episode_id + ": task '" + r.task_id + "' not in dataset");
        trajectories.push_back(trajectory_from_record(r, *task, runDir, options));
    }

    if (out.has_parent_path())
        std::filesystem::create_directories(out.parent_path());
    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    if (!file)
        throw ResourceError("cannot write " + out.string());
    for (auto const& t: trajectories)
        file << trajectory_to_json(t).dump() << '\n';
    return trajectories;
}

} // namespace panosearch
