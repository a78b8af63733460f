// SPDX-License-Identifier: Apache-2.0
#pragma once

// Drives agents through episodes and benchmark runs.

#include <panosearch/agent.hpp>
#include <panosearch/env.hpp>
#include <panosearch/policies.hpp>
#include <panosearch/records.hpp>
#include <panosearch/report.hpp>
#include <panosearch/scoring.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace panosearch
{

struct EpisodeRunOptions
{
    EpisodeConfig config;
    PromptOptions prompt;
    std::optional<RewardVariant> variant; ///< default: per task family
    /// Where observation PNGs go (run directory); empty disables image output.
    std::filesystem::path image_root;
};

/// Fills in the terminal block of a record from a finished episode.
void finalize_record(EpisodeRecord& record, const EpisodeState& state, std::optional<RewardVariant> variant);

/// Record skeleton for a freshly reset episode.
EpisodeRecord start_record(std::string episodeId, const EpisodeState& state);

/// Turn entry for the last step of `state`.
TurnRecord make_turn_record(const EpisodeState& state, bool wellFormed, std::string imagePath);

/// Runs one episode to termination. Transport failures of the agent end the
/// episode as errored instead of propagating.
EpisodeRecord run_episode(const TaskInstance& task,
                          std::size_t startIndex,
                          const Panorama& pano,
                          Agent& agent,
                          const EpisodeRunOptions& options,
                          const std::string& episodeId);

using AgentFactory = std::function<std::unique_ptr<Agent>(const std::string& episodeId)>;

struct RunConfig
{
    EpisodeRunOptions episode;
    std::filesystem::path out_dir; ///< empty: nothing is written
    bool write_images = true;
    bool resume = false; ///< skip episodes already present in out_dir/episodes.jsonl
    int workers = 1;
};

struct RunSummary
{
    BenchmarkReport report;
    std::vector<EpisodeRecord> records; ///< sorted by episode id, resumed ones included
    int resumed = 0;
};

/// Every instance from each of its four starts.
RunSummary run_benchmark(const Dataset& dataset, const AgentFactory& makeAgent, const RunConfig& config);

/// Factory for the scripted baselines, seeded per episode.
AgentFactory baseline_factory(std::string kind, std::uint64_t runSeed);

inline constexpr std::string_view kRecordsFile = "episodes.jsonl";

} // namespace panosearch
