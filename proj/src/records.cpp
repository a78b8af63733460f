// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/records.hpp>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <ctime>

namespace panosearch
{

namespace
{

nlohmann::json dir_json(const Direction& d)
{
    return {{"yaw", d.yaw_deg()}, {"pitch", d.pitch_deg()}};
}

Direction dir_from(const nlohmann::json& j)
{
    return Direction(j.at("yaw").get<double>(), j.at("pitch").get<double>());
}

bool same_turn(const TurnRecord& a, const TurnRecord& b)
{
    auto x = a;
    x.timestamp = b.timestamp;
    return x == b;
}

} // namespace

bool same_outcome(const EpisodeRecord& a, const EpisodeRecord& b)
{
    if (a.entries.size() != b.entries.size())
        return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        if (!same_turn(a.entries[i], b.entries[i]))
            return false;
    auto x = a;
    auto y = b;
    x.entries.clear();
    y.entries.clear();
    return x == y;
}

nlohmann::json action_to_json(const Action& a)
{
    if (auto const* r = std::get_if<Rotate>(&a))
        return {{"type", "rotate"}, {"yaw", r->dyaw_deg}, {"pitch", r->dpitch_deg}};
    if (auto const* s = std::get_if<Submit>(&a))
        return {{"type", "submit"}, {"yaw", s->yaw_deg}, {"pitch", s->pitch_deg}};
    return {{"type", "invalid"}, {"raw", std::get<InvalidAction>(a).raw_text}};
}

Action action_from_json(const nlohmann::json& j)
{
    auto const type = j.at("type").get<std::string>();
    if (type == "rotate")
        return Rotate {j.at("yaw").get<int>(), j.at("pitch").get<int>()};
    if (type == "submit")
        return Submit {j.at("yaw").get<int>(), j.at("pitch").get<int>()};
    if (type == "invalid")
        return InvalidAction {j.value("raw", "")};
    throw InvalidArgument("unknown action type '" + type + "'");
}

nlohmann::json record_to_json(const EpisodeRecord& r)
{
    auto entries = nlohmann::json::array();
    for (auto const& e: r.entries)
    {
        entries.push_back({
            {"turn", e.turn},
            {"observed_direction", dir_json(e.observed_direction)},
            {"action_raw", e.action_raw},
            {"action_parsed", action_to_json(e.action)},
            {"well_formed", e.well_formed},
            {"feedback", e.feedback},
            {"direction", dir_json(e.direction)},
            {"image_path", e.image_path},
            {"timestamp", e.timestamp},
        });
    }
    nlohmann::json j = {
        {"episode_id", r.episode_id},
        {"task_id", r.task_id},
        {"task_type", std::string(to_string(r.task_type))},
        {"difficulty", std::string(to_string(r.difficulty))},
        {"start_index", r.start_index},
        {"max_turns", r.max_turns},
        {"initial", {{"direction", dir_json(r.initial_direction)}, {"image_path", r.initial_image_path}}},
        {"entries", std::move(entries)},
        {"terminal", nullptr},
    };
    if (r.terminal)
    {
        auto const& t = *r.terminal;
        j["terminal"] = {
            {"success", t.success},
            {"reason", t.reason},
            {"turns", t.turns},
            {"reward",
             {{"r_corr", t.reward.r_corr},
              {"r_form", t.reward.r_form},
              {"r_dist", t.reward.r_dist},
              {"total", t.reward.total},
              {"variant", std::string(to_string(t.reward.variant))}}},
            {"errored", t.errored},
            {"error_message", t.error_message},
        };
    }
    return j;
}

EpisodeRecord record_from_json(const nlohmann::json& j)
{
    EpisodeRecord r;
    r.episode_id = j.at("episode_id").get<std::string>();
    r.task_id = j.at("task_id").get<std::string>();
    auto const type = task_type_from_string(j.at("task_type").get<std::string>());
    auto const level = difficulty_from_string(j.at("difficulty").get<std::string>());
    if (!type || !level)
        throw InvalidArgument("bad task_type or difficulty");
    r.task_type = *type;
    r.difficulty = *level;
    r.start_index = j.at("start_index").get<std::size_t>();
    r.max_turns = j.value("max_turns", 10);
    r.initial_direction = dir_from(j.at("initial").at("direction"));
    r.initial_image_path = j.at("initial").value("image_path", "");
    for (auto const& e: j.at("entries"))
    {
        TurnRecord t;
        t.turn = e.at("turn").get<int>();
        t.observed_direction = dir_from(e.at("observed_direction"));
        t.action_raw = e.at("action_raw").get<std::string>();
        t.action = action_from_json(e.at("action_parsed"));
        t.well_formed = e.value("well_formed", false);
        t.feedback = e.at("feedback").get<std::string>();
        t.direction = dir_from(e.at("direction"));
        t.image_path = e.value("image_path", "");
        t.timestamp = e.value("timestamp", "");
        r.entries.push_back(std::move(t));
    }
    auto const& term = j.at("terminal");
    if (!term.is_null())
    {
        TerminalRecord t;
        t.success = term.at("success").get<bool>();
        t.reason = term.at("reason").get<std::string>();
        t.turns = term.at("turns").get<int>();
        auto const& rw = term.at("reward");
        t.reward.r_corr = rw.at("r_corr").get<double>();
        t.reward.r_form = rw.at("r_form").get<double>();
        t.reward.r_dist = rw.at("r_dist").get<double>();
        t.reward.total = rw.at("total").get<double>();
        auto const variant = reward_variant_from_string(rw.at("variant").get<std::string>());
        if (!variant)
            throw InvalidArgument("bad reward variant");
        t.reward.variant = *variant;
        t.errored = term.value("errored", false);
        t.error_message = term.value("error_message", "");
        r.terminal = t;
    }
    return r;
}

std::string utc_timestamp()
{
    auto const now = std::chrono::system_clock::now();
    auto const secs = std::chrono::system_clock::to_time_t(now);
    auto const ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm {};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    return fmt::format("{}.{:03}Z", buf, ms);
}

std::string make_episode_id(std::string_view taskId, std::size_t startIndex)
{
    return fmt::format("ep-{}-{}", taskId, startIndex);
}

std::string turn_image_path(std::string_view episodeId, int turn)
{
    return fmt::format("{}/turn_{}.png", episodeId, turn);
}

std::vector<EpisodeRecord> load_records(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ResourceError("cannot open records file " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<EpisodeRecord> out;
    std::size_t pos = 0;
    int lineNo = 0;
    while (pos < content.size())
    {
        auto const nl = content.find('\n', pos);
        bool const lastUnterminated = nl == std::string::npos;
        auto const line = content.substr(pos, lastUnterminated ? std::string::npos : nl - pos);
        pos = lastUnterminated ? content.size() : nl + 1;
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            out.push_back(record_from_json(nlohmann::json::parse(line)));
        }
        catch (const std::exception& e)
        {
            if (lastUnterminated)
            {
                spdlog::warn("{}: ignoring truncated final line", path.string());
                break;
            }
            throw ParseError(fmt::format("line {}", lineNo), "record", e.what());
        }
    }
    return out;
}

RecordWriter::RecordWriter(const std::filesystem::path& path): path_(path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());

    // A previous crash may have left a partial final line. It can never be a
    // complete record, so drop it and append after the last full line.
    if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0)
    {
        std::string content;
        {
            std::ifstream in(path, std::ios::binary);
            content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        }
        if (content.back() != '\n')
        {
            auto const keep = content.rfind('\n');
            auto const size = keep == std::string::npos ? 0 : keep + 1;
            spdlog::warn("{}: dropping {} bytes of a torn final line", path.string(), content.size() - size);
            std::filesystem::resize_file(path, size);
        }
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_)
        throw ResourceError("cannot open records file " + path.string());
}

void RecordWriter::append(const EpisodeRecord& r)
{
    auto line = record_to_json(r).dump();
    std::lock_guard lock(mutex_);
    out_ << line << '\n';
    out_.flush();
    if (!out_)
        throw ResourceError("write failed for " + path_.string());
}

std::optional<EpisodeResult> to_episode_result(const EpisodeRecord& r)
{
    if (!r.terminal)
        return std::nullopt;
    EpisodeResult e;
    e.episode_id = r.episode_id;
    e.task_type = r.task_type;
    e.difficulty = r.difficulty;
    e.success = r.terminal->success;
    e.terminal_step = r.terminal->turns;
    e.errored = r.terminal->errored;
    return e;
}

std::vector<HistoryEntry> history_from_record(const EpisodeRecord& r)
{
    std::vector<HistoryEntry> out;
    std::string lastFeedback;
    for (auto const& t: r.entries)
    {
        HistoryEntry h;
        h.observed_direction = t.observed_direction;
        h.observed_feedback = lastFeedback;
        h.response_text = t.action_raw;
        h.action = t.action;
        h.feedback = t.feedback;
        h.result_direction = t.direction;
        h.turn = t.turn;
        lastFeedback = t.feedback;
        out.push_back(std::move(h));
    }
    return out;
}

BenchmarkReport report_from_records(std::span<const EpisodeRecord> records)
{
    std::vector<EpisodeResult> results;
    int maxTurns = 0;
    for (auto const& r: records)
    {
        if (auto e = to_episode_result(r))
        {
            results.push_back(std::move(*e));
            maxTurns = std::max(maxTurns, r.max_turns);
        }
    }
    return aggregate_report(results, maxTurns == 0 ? 10 : maxTurns);
}

} // namespace panosearch
