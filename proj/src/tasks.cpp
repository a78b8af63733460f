// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/tasks.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace panosearch
{

using nlohmann::json;

std::string_view to_string(TaskType t) noexcept
{
    return t == TaskType::HOS ? "HOS" : "HPS";
}

std::string_view to_string(DifficultyLevel l) noexcept
{
    switch (l)
    {
        case DifficultyLevel::Easy: return "easy";
        case DifficultyLevel::Medium: return "medium";
        case DifficultyLevel::Hard: return "hard";
        case DifficultyLevel::Extreme: return "extreme";
    }
    return "easy";
}

std::string_view to_string(DifficultyBasis b) noexcept
{
    return b == DifficultyBasis::Annotated ? "annotated" : "computed";
}

std::string_view to_string(Split s) noexcept
{
    switch (s)
    {
        case Split::Bench: return "bench";
        case Split::Sft: return "sft";
        case Split::Rl: return "rl";
    }
    return "bench";
}

std::optional<TaskType> task_type_from_string(std::string_view s) noexcept
{
    if (s == "HOS")
        return TaskType::HOS;
    if (s == "HPS")
        return TaskType::HPS;
    return std::nullopt;
}

std::optional<DifficultyLevel> difficulty_from_string(std::string_view s) noexcept
{
    for (auto l: {DifficultyLevel::Easy, DifficultyLevel::Medium, DifficultyLevel::Hard, DifficultyLevel::Extreme})
        if (to_string(l) == s)
            return l;
    return std::nullopt;
}

namespace
{

std::optional<Split> split_from_string(std::string_view s) noexcept
{
    for (auto v: {Split::Bench, Split::Sft, Split::Rl})
        if (to_string(v) == s)
            return v;
    return std::nullopt;
}

} // namespace

ToleranceSpec default_tolerance(TaskType t) noexcept
{
    return t == TaskType::HOS ? ToleranceSpec::object_search() : ToleranceSpec::path_search();
}

std::array<Direction, 4> default_start_orientations() noexcept
{
    return {Direction(0.0, 0.0), Direction(90.0, 0.0), Direction(180.0, 0.0), Direction(270.0, 0.0)};
}

const TaskInstance* Dataset::find(std::string_view id) const noexcept
{
    auto it = std::find_if(instances.begin(), instances.end(), [&](const TaskInstance& t) { return t.id == id; });
    return it == instances.end() ? nullptr : &*it;
}

std::filesystem::path Dataset::panorama_path(const TaskInstance& t) const
{
    std::filesystem::path const ref(t.panorama_ref);
    return ref.is_absolute() ? ref : base_dir / ref;
}

// --- serialisation -----------------------------------------------------------

namespace
{

json direction_to_json(const Direction& d)
{
    return {{"yaw", d.yaw_deg()}, {"pitch", d.pitch_deg()}};
}

class RecordReader
{
  public:
    RecordReader(const json& j, std::string id): j_(j), id_(std::move(id)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& detail) const
    {
        throw ParseError(id_, path, detail);
    }

    const json& require(const json& obj, const std::string& key, const std::string& path) const
    {
        if (!obj.is_object() || !obj.contains(key))
            fail(path, "missing required field");
        return obj.at(key);
    }

    std::string string(const json& obj, const std::string& key, const std::string& path) const
    {
        auto const& v = require(obj, key, path);
        if (!v.is_string())
            fail(path, "expected a string");
        return v.get<std::string>();
    }

    double number(const json& obj, const std::string& key, const std::string& path) const
    {
        auto const& v = require(obj, key, path);
        if (!v.is_number())
            fail(path, "expected a number");
        double const d = v.get<double>();
        if (!std::isfinite(d))
            fail(path, "expected a finite number");
        return d;
    }

    bool boolean(const json& obj, const std::string& key, const std::string& path) const
    {
        auto const& v = require(obj, key, path);
        if (!v.is_boolean())
            fail(path, "expected a boolean");
        return v.get<bool>();
    }

    Direction direction(const json& obj, const std::string& path) const
    {
        if (!obj.is_object())
            fail(path, "expected an object with yaw and pitch");
        double const yaw = number(obj, "yaw", path + ".yaw");
        double const pitch = number(obj, "pitch", path + ".pitch");
        if (yaw < 0.0 || yaw >= 360.0)
            fail(path + ".yaw", "must be in [0, 360)");
        if (pitch < -90.0 || pitch > 90.0)
            fail(path + ".pitch", "must be in [-90, 90]");
        return Direction(yaw, pitch);
    }

    const json& root() const { return j_; }

  private:
    const json& j_;
    std::string id_;
};

const std::set<std::string>& known_task_fields()
{
    static const std::set<std::string> fields {
        "id", "task_type", "panorama_ref", "instruction", "target", "start_orientations",
        "difficulty", "scene_category", "hps_cues", "visibility_ratios",
    };
    return fields;
}

} // namespace

json task_to_json(const TaskInstance& t)
{
    json j = t.extra.is_object() ? t.extra : json::object();
    j["id"] = t.id;
    j["task_type"] = std::string(to_string(t.task_type));
    j["panorama_ref"] = t.panorama_ref;
    j["instruction"] = t.instruction;
    j["target"] = {
        {"yaw", t.target.center().yaw_deg()},
        {"pitch", t.target.center().pitch_deg()},
        {"width", t.target.width_deg()},
        {"height", t.target.height_deg()},
    };
    json starts = json::array();
    for (auto const& s: t.start_orientations)
        starts.push_back(direction_to_json(s));
    j["start_orientations"] = std::move(starts);
    j["difficulty"] = {
        {"level", std::string(to_string(t.difficulty.level))},
        {"basis", std::string(to_string(t.difficulty.basis))},
    };
    j["scene_category"] = t.scene_category;
    if (t.hps_cues)
        j["hps_cues"] = {{"has_text_cue", t.hps_cues->has_text_cue}, {"cue_aligned", t.hps_cues->cue_aligned}};
    if (t.visibility_ratios)
        j["visibility_ratios"] = *t.visibility_ratios;
    return j;
}

TaskInstance task_from_json(const json& j)
{
    std::string id = "<unknown>";
    if (j.is_object() && j.contains("id") && j["id"].is_string())
        id = j["id"].get<std::string>();
    RecordReader r(j, id);
    if (!j.is_object())
        r.fail("", "record must be an object");

    TaskInstance t;
    t.id = r.string(j, "id", "id");
    if (t.id.empty())
        r.fail("id", "must be non-empty");

    auto const type = task_type_from_string(r.string(j, "task_type", "task_type"));
    if (!type)
        r.fail("task_type", "must be HOS or HPS");
    t.task_type = *type;

    t.panorama_ref = r.string(j, "panorama_ref", "panorama_ref");
    if (t.panorama_ref.empty())
        r.fail("panorama_ref", "must be non-empty");
    t.instruction = r.string(j, "instruction", "instruction");
    if (t.instruction.empty())
        r.fail("instruction", "must be non-empty");

    auto const& target = r.require(j, "target", "target");
    Direction const center = r.direction(target, "target");
    double const width = r.number(target, "width", "target.width");
    double const height = r.number(target, "height", "target.height");
    if (!(width > 0.0 && width <= 360.0))
        r.fail("target.width", "must be in (0, 360]");
    if (!(height > 0.0 && height <= 180.0))
        r.fail("target.height", "must be in (0, 180]");
    t.target = AngularBox(center, width, height);

    auto const& starts = r.require(j, "start_orientations", "start_orientations");
    if (!starts.is_array() || starts.size() != 4)
        r.fail("start_orientations", "must hold exactly 4 directions");
    for (std::size_t i = 0; i < 4; ++i)
        t.start_orientations[i] = r.direction(starts[i], "start_orientations[" + std::to_string(i) + "]");
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b)
            if (t.start_orientations[a] == t.start_orientations[b])
                r.fail("start_orientations[" + std::to_string(b) + "]", "start orientations must be pairwise distinct");

    auto const& difficulty = r.require(j, "difficulty", "difficulty");
    auto const level = difficulty_from_string(r.string(difficulty, "level", "difficulty.level"));
    if (!level)
        r.fail("difficulty.level", "must be easy, medium, hard or extreme");
    auto const basis = r.string(difficulty, "basis", "difficulty.basis");
    if (basis != "annotated" && basis != "computed")
        r.fail("difficulty.basis", "must be annotated or computed");
    t.difficulty = {*level, basis == "annotated" ? DifficultyBasis::Annotated : DifficultyBasis::Computed};
    if (t.difficulty.level == DifficultyLevel::Extreme && t.task_type != TaskType::HPS)
        r.fail("difficulty.level", "extreme is only valid for HPS");

    t.scene_category = r.string(j, "scene_category", "scene_category");

    if (j.contains("hps_cues"))
    {
        auto const& cues = j["hps_cues"];
        t.hps_cues = HpsCues {
            r.boolean(cues, "has_text_cue", "hps_cues.has_text_cue"),
            r.boolean(cues, "cue_aligned", "hps_cues.cue_aligned"),
        };
    }
    if (t.task_type == TaskType::HPS && !t.hps_cues)
        r.fail("hps_cues", "required for HPS instances");

    if (j.contains("visibility_ratios"))
    {
        auto const& ratios = j["visibility_ratios"];
        if (!ratios.is_array() || ratios.size() != 4)
            r.fail("visibility_ratios", "must hold exactly 4 ratios");
        std::array<double, 4> values {};
        for (std::size_t i = 0; i < 4; ++i)
        {
            auto const path = "visibility_ratios[" + std::to_string(i) + "]";
            if (!ratios[i].is_number())
                r.fail(path, "expected a number");
            values[i] = ratios[i].get<double>();
            if (!(values[i] >= 0.0 && values[i] <= 1.0))
                r.fail(path, "must be in [0, 1]");
        }
        t.visibility_ratios = values;
    }

    for (auto const& [key, value]: j.items())
        if (!known_task_fields().contains(key))
            t.extra[key] = value;
    return t;
}

std::string write_dataset(const Dataset& ds)
{
    json header = ds.extra.is_object() ? ds.extra : json::object();
    header["format"] = "panosearch-manifest";
    header["manifest_version"] = ds.manifest_version;
    header["split"] = std::string(to_string(ds.split));

    std::string out = header.dump();
    out += '\n';
    for (auto const& t: ds.instances)
    {
        out += task_to_json(t).dump();
        out += '\n';
    }
    return out;
}

void write_dataset_file(const Dataset& ds, const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ResourceError("cannot write manifest " + path.string());
    out << write_dataset(ds);
}

Dataset parse_dataset_text(std::string_view text, std::filesystem::path baseDir)
{
    Dataset ds;
    ds.base_dir = std::move(baseDir);

    std::istringstream in {std::string(text)};
    std::string line;
    std::size_t lineNo = 0;
    bool haveHeader = false;
    std::set<std::string> seen;

    while (std::getline(in, line))
    {
        ++lineNo;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;

        json j;
        try
        {
            j = json::parse(line);
        }
        catch (const json::parse_error& e)
        {
            throw ParseError("<line " + std::to_string(lineNo) + ">", "", std::string("malformed JSON: ") + e.what());
        }

        if (!haveHeader)
        {
            RecordReader r(j, "<header>");
            if (!j.is_object() || !j.contains("manifest_version"))
                r.fail("manifest_version", "first record must be the manifest header");
            ds.manifest_version = r.string(j, "manifest_version", "manifest_version");
            if (j.contains("split"))
            {
                auto const split = split_from_string(r.string(j, "split", "split"));
                if (!split)
                    r.fail("split", "must be bench, sft or rl");
                ds.split = *split;
            }
            for (auto const& [key, value]: j.items())
                if (key != "format" && key != "manifest_version" && key != "split")
                    ds.extra[key] = value;
            haveHeader = true;
            continue;
        }

        auto task = task_from_json(j);
        if (!seen.insert(task.id).second)
            throw ParseError(task.id, "id", "duplicate id '" + task.id + "'");
        ds.instances.push_back(std::move(task));
    }

    if (!haveHeader)
        throw ParseError("<header>", "manifest_version", "manifest is empty");
    return ds;
}

Dataset parse_dataset(const std::filesystem::path& manifest, ParseOptions options)
{
    std::ifstream in(manifest, std::ios::binary);
    if (!in)
        throw ResourceError("cannot open manifest " + manifest.string());
    std::stringstream buffer;
    buffer << in.rdbuf();

    auto ds = parse_dataset_text(buffer.str(), manifest.parent_path());
    if (options.check_panoramas)
    {
        auto const missing = check_panorama_refs(ds);
        if (!missing.empty())
            throw ResourceError(missing.front());
    }
    return ds;
}

std::vector<std::string> check_panorama_refs(const Dataset& ds)
{
    std::vector<std::string> missing;
    for (auto const& t: ds.instances)
        if (!std::filesystem::is_regular_file(ds.panorama_path(t)))
            missing.push_back("instance '" + t.id + "', field 'panorama_ref': file not found: " + ds.panorama_path(t).string());
    return missing;
}

// --- difficulty -----------------------------------------------------------------

namespace
{

// Overlap length of two circular arcs given as (centre, width), degrees.
double circular_overlap(double centerA, double widthA, double centerB, double widthB)
{
    double const d = std::fabs(angular_diff(centerA, centerB));
    double total = 0.0;
    // B's two nearest representatives on the line; wide arcs can meet on both sides
    for (double offset: {d, 360.0 - d})
    {
        double const lo = std::max(-widthA / 2.0, offset - widthB / 2.0);
        double const hi = std::min(widthA / 2.0, offset + widthB / 2.0);
        total += std::max(0.0, hi - lo);
    }
    return std::min({total, widthA, widthB});
}

} // namespace

double visibility_ratio(const AngularBox& target, const Direction& start, const ViewSpec& view)
{
    double const yawOverlap = circular_overlap(target.center().yaw_deg(), target.width_deg(), start.yaw_deg(), view.hfov_deg());

    double const tLo = target.center().pitch_deg() - target.height_deg() / 2.0;
    double const tHi = target.center().pitch_deg() + target.height_deg() / 2.0;
    double const vLo = start.pitch_deg() - view.vfov_deg() / 2.0;
    double const vHi = start.pitch_deg() + view.vfov_deg() / 2.0;
    double const pitchOverlap = std::max(0.0, std::min(tHi, vHi) - std::max(tLo, vLo));

    double const ratio = (yawOverlap * pitchOverlap) / (target.width_deg() * target.height_deg());
    return std::clamp(ratio, 0.0, 1.0);
}

DifficultyTag classify_hos_difficulty(double ratio, HosThresholds thresholds)
{
    if (!(0.0 <= thresholds.hard && thresholds.hard < thresholds.easy && thresholds.easy <= 1.0))
        throw InvalidArgument("HOS thresholds must satisfy 0 <= hard < easy <= 1");
    DifficultyLevel level = DifficultyLevel::Medium;
    if (ratio >= thresholds.easy)
        level = DifficultyLevel::Easy;
    else if (ratio <= thresholds.hard)
        level = DifficultyLevel::Hard;
    return {level, DifficultyBasis::Computed};
}

HpsDifficultyMapping default_hps_mapping()
{
    return {
        {HpsCues {true, true}, DifficultyLevel::Easy},
        {HpsCues {false, true}, DifficultyLevel::Medium},
        {HpsCues {true, false}, DifficultyLevel::Hard},
        {HpsCues {false, false}, DifficultyLevel::Extreme},
    };
}

DifficultyTag classify_hps_difficulty(HpsCues cues, const HpsDifficultyMapping& mapping)
{
    std::set<DifficultyLevel> levels;
    for (bool text: {false, true})
        for (bool aligned: {false, true})
        {
            auto it = mapping.find(HpsCues {text, aligned});
            if (it == mapping.end())
                throw InvalidArgument("HPS difficulty mapping must cover all four cue combinations");
            levels.insert(it->second);
        }
    if (levels.size() != 4 || mapping.size() != 4)
        throw InvalidArgument("HPS difficulty mapping must be a bijection onto the four levels");
    return {mapping.at(cues), DifficultyBasis::Computed};
}

DifficultyLevel episode_difficulty(const TaskInstance& t, std::size_t startIndex, HosThresholds thresholds)
{
    if (t.task_type == TaskType::HOS && t.difficulty.basis == DifficultyBasis::Computed && t.visibility_ratios &&
        startIndex < t.visibility_ratios->size())
        return classify_hos_difficulty((*t.visibility_ratios)[startIndex], thresholds).level;
    return t.difficulty.level;
}

void compute_hos_difficulty(TaskInstance& t, const ViewSpec& view, HosThresholds thresholds)
{
    std::array<double, 4> ratios {};
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
    {
        ratios[i] = visibility_ratio(t.target, t.start_orientations[i], view);
        sum += ratios[i];
    }
    t.visibility_ratios = ratios;
    t.difficulty = classify_hos_difficulty(sum / 4.0, thresholds);
}

} // namespace panosearch
