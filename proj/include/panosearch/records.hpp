// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-episode logs. A run directory holds episodes.jsonl (one finished
// episode per line, appended and flushed as soon as the episode ends) and one
// sub-directory of observation PNGs per episode.

#include <panosearch/action.hpp>
#include <panosearch/env.hpp>
#include <panosearch/report.hpp>
#include <panosearch/scoring.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace panosearch
{

struct TurnRecord
{
    int turn = 0;
    Direction observed_direction;
    std::string action_raw;
    Action action;
    bool well_formed = false;
    std::string feedback;
    Direction direction;    ///< after the action
    std::string image_path; ///< observation after the action, relative to the run directory
    std::string timestamp;  ///< ISO-8601 UTC

    friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

struct TerminalRecord
{
    bool success = false;
    std::string reason; ///< "submitted" | "turn_cap" | "error"
    int turns = 0;
    RewardBreakdown reward;
    bool errored = false;
    std::string error_message;

    friend bool operator==(const TerminalRecord&, const TerminalRecord&) = default;
};

struct EpisodeRecord
{
    std::string episode_id;
    std::string task_id;
    TaskType task_type = TaskType::HOS;
    DifficultyLevel difficulty = DifficultyLevel::Easy;
    std::size_t start_index = 0;
    int max_turns = 10;
    Direction initial_direction;
    std::string initial_image_path;
    std::vector<TurnRecord> entries;
    std::optional<TerminalRecord> terminal;

    friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

/// Equality ignoring timestamps (which differ between otherwise identical runs).
bool same_outcome(const EpisodeRecord& a, const EpisodeRecord& b);

nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const EpisodeRecord& r);
EpisodeRecord record_from_json(const nlohmann::json& j);

std::string utc_timestamp();

/// "ep-{task}-{start}"
std::string make_episode_id(std::string_view taskId, std::size_t startIndex);

/// Relative image path for turn t of an episode.
std::string turn_image_path(std::string_view episodeId, int turn);

/// Records from a JSONL file. A truncated final line (interrupted write) is
/// skipped; any other malformed line throws ParseError.
std::vector<EpisodeRecord> load_records(const std::filesystem::path& path);

/// Thread-safe appender; every record is flushed before append() returns.
/// Opening a file whose last line is torn truncates that partial line.
class RecordWriter
{
  public:
    explicit RecordWriter(const std::filesystem::path& path);
    void append(const EpisodeRecord& r);
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

  private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mutex_;
};

/// Report input for a finished record; nullopt while the episode is unfinished.
std::optional<EpisodeResult> to_episode_result(const EpisodeRecord& r);

/// History reconstructed from a record, as the environment would have produced it.
std::vector<HistoryEntry> history_from_record(const EpisodeRecord& r);

/// Aggregates all finished records; max_turns is the largest cap seen (10 when empty).
BenchmarkReport report_from_records(std::span<const EpisodeRecord> records);

} // namespace panosearch
