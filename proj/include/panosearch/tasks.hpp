// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <panosearch/geometry.hpp>
#include <panosearch/projection.hpp>

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace panosearch
{

enum class TaskType
{
    HOS, ///< object search: centre the target, pitch checked
    HPS, ///< path search: align the heading, yaw only
};

enum class DifficultyLevel
{
    Easy,
    Medium,
    Hard,
    Extreme, ///< HPS only
};

enum class DifficultyBasis
{
    Annotated,
    Computed,
};

struct DifficultyTag
{
    DifficultyLevel level = DifficultyLevel::Easy;
    DifficultyBasis basis = DifficultyBasis::Annotated;

    friend bool operator==(const DifficultyTag&, const DifficultyTag&) = default;
};

struct HpsCues
{
    bool has_text_cue = false;
    bool cue_aligned = false;

    friend auto operator<=>(const HpsCues&, const HpsCues&) = default;
};

enum class Split
{
    Bench,
    Sft,
    Rl,
};

std::string_view to_string(TaskType t) noexcept;
std::string_view to_string(DifficultyLevel l) noexcept;
std::string_view to_string(DifficultyBasis b) noexcept;
std::string_view to_string(Split s) noexcept;
std::optional<TaskType> task_type_from_string(std::string_view s) noexcept;
std::optional<DifficultyLevel> difficulty_from_string(std::string_view s) noexcept;

/// Default success tolerances for a task family (30/20 deg HOS, 10 deg yaw-only HPS).
ToleranceSpec default_tolerance(TaskType t) noexcept;

/// Uniform quarter turns at the horizon, used when a task has no annotated starts.
std::array<Direction, 4> default_start_orientations() noexcept;

struct TaskInstance
{
    std::string id;
    TaskType task_type = TaskType::HOS;
    std::string panorama_ref; ///< relative to the manifest directory
    std::string instruction;
    AngularBox target;
    std::array<Direction, 4> start_orientations = default_start_orientations();
    DifficultyTag difficulty;
    std::string scene_category;
    std::optional<HpsCues> hps_cues;
    std::optional<std::array<double, 4>> visibility_ratios; ///< HOS, one per start
    nlohmann::json extra = nlohmann::json::object();        ///< unknown fields, kept verbatim

    friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

struct Dataset
{
    std::vector<TaskInstance> instances;
    Split split = Split::Bench;
    std::string manifest_version = "1";
    std::filesystem::path base_dir; ///< not serialised; used to resolve panorama_ref
    nlohmann::json extra = nlohmann::json::object();

    [[nodiscard]] const TaskInstance* find(std::string_view id) const noexcept;
    [[nodiscard]] std::filesystem::path panorama_path(const TaskInstance& t) const;
};

nlohmann::json task_to_json(const TaskInstance& t);
/// Validates every invariant of a single record. Throws ParseError naming the id and field path.
TaskInstance task_from_json(const nlohmann::json& j);

/// Line-delimited manifest: a header record followed by one record per instance.
std::string write_dataset(const Dataset& ds);
void write_dataset_file(const Dataset& ds, const std::filesystem::path& path);

Dataset parse_dataset_text(std::string_view text, std::filesystem::path baseDir = {});

struct ParseOptions
{
    bool check_panoramas = true;
};

/// Reads and validates a manifest file. With `check_panoramas`, every
/// panorama_ref must resolve to an existing file.
Dataset parse_dataset(const std::filesystem::path& manifest, ParseOptions options = {});

/// Checks that each panorama_ref exists; returns one message per missing file.
std::vector<std::string> check_panorama_refs(const Dataset& ds);

/// Fraction of the target's angular rectangle inside the initial view's angular rectangle.
double visibility_ratio(const AngularBox& target, const Direction& start, const ViewSpec& view);

struct HosThresholds
{
    double easy = 0.5; ///< ratio >= easy -> Easy
    double hard = 0.0; ///< ratio <= hard -> Hard
};

DifficultyTag classify_hos_difficulty(double ratio, HosThresholds thresholds = {});

using HpsDifficultyMapping = std::map<HpsCues, DifficultyLevel>;

HpsDifficultyMapping default_hps_mapping();

/// Table lookup; the mapping must cover all four cue combinations bijectively.
DifficultyTag classify_hps_difficulty(HpsCues cues, const HpsDifficultyMapping& mapping = default_hps_mapping());

/// Difficulty of one episode: per-start visibility for computed HOS tags, the instance tag otherwise.
DifficultyLevel episode_difficulty(const TaskInstance& t, std::size_t startIndex, HosThresholds thresholds = {});

/// Fills `visibility_ratios` and a computed instance tag (from the mean ratio) for a HOS task.
void compute_hos_difficulty(TaskInstance& t, const ViewSpec& view, HosThresholds thresholds = {});

} // namespace panosearch
