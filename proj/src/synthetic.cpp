// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/synthetic.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>

namespace panosearch
{

std::uint64_t SplitRng::next() noexcept
{
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double SplitRng::uniform(double lo, double hi) noexcept
{
    double const unit = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

int SplitRng::integer(int lo, int hi) noexcept
{
    auto const span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
}

namespace
{

struct NamedColor
{
    std::string_view name;
    Rgb color;
};

// Every palette colour has a channel outside the background's [50, 200] range.
constexpr std::array<NamedColor, 6> kPalette {{
    {"red", {230, 30, 30}},
    {"blue", {30, 60, 230}},
    {"yellow", {240, 220, 20}},
    {"magenta", {230, 30, 230}},
    {"cyan", {20, 220, 230}},
    {"orange", {250, 140, 0}},
}};

constexpr Rgb kPathColor {200, 20, 20};
constexpr Rgb kObstacleColor {40, 40, 40};

constexpr std::array<std::string_view, 6> kSceneCategories {
    "retail", "transportation", "street", "public institution", "office", "leisure",
};

struct BackgroundParams
{
    std::array<int, 3> m1 {};
    std::array<int, 3> m2 {};
    std::array<double, 3> phase1 {};
    std::array<double, 3> phase2 {};
    std::array<double, 3> phase3 {};
};

BackgroundParams background_params(std::uint64_t seed) noexcept
{
    SplitRng rng(seed ^ 0xB4C4D00Dull);
    BackgroundParams p;
    for (std::size_t c = 0; c < 3; ++c)
    {
        p.m1[c] = rng.integer(2, 3);
        p.m2[c] = rng.integer(5, 7);
        p.phase1[c] = rng.uniform(0.0, 2.0 * kPi);
        p.phase2[c] = rng.uniform(0.0, 2.0 * kPi);
        p.phase3[c] = rng.uniform(0.0, 2.0 * kPi);
    }
    return p;
}

double background_channel(const BackgroundParams& p, std::size_t c, double yaw, double pitch) noexcept
{
    double const cp = std::cos(pitch);
    return 125.0 + 35.0 * cp * std::sin(p.m1[c] * yaw + p.phase1[c]) + 25.0 * std::sin(2.0 * pitch + p.phase3[c]) +
           15.0 * cp * std::cos(p.m2[c] * yaw + p.phase2[c]) * std::cos(3.0 * pitch);
}

RgbImage paint_background(int width, int height, std::uint64_t seed)
{
    auto const params = background_params(seed);
    RgbImage img(width, height);

    // separable evaluation: per-column yaw terms, per-row pitch terms
    std::vector<std::array<double, 6>> columns(static_cast<std::size_t>(width));
    for (int i = 0; i < width; ++i)
    {
        double const yaw = deg_to_rad((i + 0.5) / width * 360.0);
        for (std::size_t c = 0; c < 3; ++c)
        {
            columns[static_cast<std::size_t>(i)][c] = std::sin(params.m1[c] * yaw + params.phase1[c]);
            columns[static_cast<std::size_t>(i)][c + 3] = std::cos(params.m2[c] * yaw + params.phase2[c]);
        }
    }
    for (int j = 0; j < height; ++j)
    {
        double const pitch = deg_to_rad(90.0 - (j + 0.5) / height * 180.0);
        double const cp = std::cos(pitch);
        std::array<double, 3> base {};
        std::array<double, 3> fine {};
        for (std::size_t c = 0; c < 3; ++c)
        {
            base[c] = 125.0 + 25.0 * std::sin(2.0 * pitch + params.phase3[c]);
            fine[c] = 15.0 * cp * std::cos(3.0 * pitch);
        }
        for (int i = 0; i < width; ++i)
        {
            auto const& col = columns[static_cast<std::size_t>(i)];
            std::array<std::uint8_t, 3> rgb {};
            for (std::size_t c = 0; c < 3; ++c)
            {
                double const v = base[c] + 35.0 * cp * col[c] + fine[c] * col[c + 3];
                rgb[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
            img.set(i, j, {rgb[0], rgb[1], rgb[2]});
        }
    }
    return img;
}

double row_pitch_deg(int j, int height) noexcept
{
    return 90.0 - (j + 0.5) / height * 180.0;
}

double column_yaw_deg(int i, int width) noexcept
{
    return (i + 0.5) / width * 360.0;
}

void paint_disc(RgbImage& img, const Direction& center, double radiusDeg, Rgb color)
{
    Vec3 const c = direction_to_unit_vector(center);
    double const cosRadius = std::cos(deg_to_rad(radiusDeg));
    int const h = img.height();
    int const w = img.width();
    for (int j = 0; j < h; ++j)
    {
        double const pitch = row_pitch_deg(j, h);
        if (std::fabs(pitch - center.pitch_deg()) > radiusDeg + 1.0)
            continue;
        for (int i = 0; i < w; ++i)
        {
            Vec3 const v = direction_to_unit_vector(Direction(column_yaw_deg(i, w), pitch));
            if (v.dot(c) >= cosRadius)
                img.set(i, j, color);
        }
    }
}

void paint_floor_stripe(RgbImage& img, double headingDeg, double halfWidthDeg, Rgb color)
{
    int const h = img.height();
    int const w = img.width();
    for (int j = 0; j < h; ++j)
    {
        if (row_pitch_deg(j, h) > -8.0)
            continue;
        for (int i = 0; i < w; ++i)
            if (std::fabs(angular_diff(column_yaw_deg(i, w), headingDeg)) <= halfWidthDeg)
                img.set(i, j, color);
    }
}

double great_circle_deg(const Direction& a, const Direction& b)
{
    double const dot = std::clamp(direction_to_unit_vector(a).dot(direction_to_unit_vector(b)), -1.0, 1.0);
    return rad_to_deg(std::acos(dot));
}

SyntheticScene make_hos_scene(SplitRng& rng, int index, const SynthSpec& spec, std::uint64_t seed)
{
    auto const targetIdx = static_cast<std::size_t>(rng.integer(0, static_cast<int>(kPalette.size()) - 1));
    double const radius = rng.uniform(4.0, 9.0);
    Direction const center(rng.uniform(0.0, 360.0), rng.uniform(-30.0, 30.0));

    RgbImage img = paint_background(spec.pano_width, spec.pano_height, seed + static_cast<std::uint64_t>(index));

    // two distractors in other colours, well separated from the target
    for (int k = 0, placed = 0; placed < 2 && k < 64; ++k)
    {
        auto const idx = static_cast<std::size_t>(rng.integer(0, static_cast<int>(kPalette.size()) - 1));
        double const r = rng.uniform(4.0, 8.0);
        Direction const at(rng.uniform(0.0, 360.0), rng.uniform(-40.0, 40.0));
        if (idx == targetIdx || great_circle_deg(at, center) < radius + r + 10.0)
            continue;
        paint_disc(img, at, r, kPalette[idx].color);
        ++placed;
    }
    paint_disc(img, center, radius, kPalette[targetIdx].color);

    double const halfWidth = rad_to_deg(std::asin(std::sin(deg_to_rad(radius)) / std::cos(deg_to_rad(center.pitch_deg()))));

    TaskInstance task;
    task.id = fmt::format("hos-{:04d}", index);
    task.task_type = TaskType::HOS;
    task.panorama_ref = fmt::format("panos/{}.png", task.id);
    task.instruction = fmt::format("Find the {} disc and center it in your view.", kPalette[targetIdx].name);
    task.target = AngularBox(center, 2.0 * halfWidth, 2.0 * radius);
    task.scene_category = std::string(kSceneCategories[static_cast<std::size_t>(rng.integer(0, 5))]);
    compute_hos_difficulty(task, spec.visibility_view);

    return {Panorama(std::move(img), task.panorama_ref), std::move(task), kPalette[targetIdx].color, radius};
}

SyntheticScene make_hps_scene(SplitRng& rng, int index, const SynthSpec& spec, std::uint64_t seed)
{
    double const heading = rng.uniform(0.0, 360.0);
    double const halfWidth = rng.uniform(2.0, 4.0);
    HpsCues const cues {rng.chance(0.5), rng.chance(0.5)};

    RgbImage img = paint_background(spec.pano_width, spec.pano_height, seed + 7919u * static_cast<std::uint64_t>(index + 1));
    for (int k = 0, placed = 0; placed < 2 && k < 64; ++k)
    {
        double const other = rng.uniform(0.0, 360.0);
        if (std::fabs(angular_diff(other, heading)) < 40.0)
            continue;
        paint_floor_stripe(img, other, rng.uniform(2.0, 4.0), kObstacleColor);
        ++placed;
    }
    paint_floor_stripe(img, heading, halfWidth, kPathColor);

    TaskInstance task;
    task.id = fmt::format("hps-{:04d}", index);
    task.task_type = TaskType::HPS;
    task.panorama_ref = fmt::format("panos/{}.png", task.id);
    task.instruction = "Turn toward the red floor path that leads to the exit.";
    if (cues.has_text_cue)
        task.instruction += cues.cue_aligned ? " A sign above the path reads EXIT." : " A sign nearby reads EXIT.";
    task.target = AngularBox(Direction(heading, -30.0), 2.0 * halfWidth, 40.0);
    task.scene_category = std::string(kSceneCategories[static_cast<std::size_t>(rng.integer(0, 5))]);
    task.hps_cues = cues;
    task.difficulty = classify_hps_difficulty(cues);

    return {Panorama(std::move(img), task.panorama_ref), std::move(task), kPathColor, 0.0};
}

} // namespace

Rgb background_color(double yawDeg, double pitchDeg, std::uint64_t seed) noexcept
{
    auto const params = background_params(seed);
    std::array<std::uint8_t, 3> rgb {};
    for (std::size_t c = 0; c < 3; ++c)
    {
        double const v = background_channel(params, c, deg_to_rad(yawDeg), deg_to_rad(pitchDeg));
        rgb[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return {rgb[0], rgb[1], rgb[2]};
}

std::vector<SyntheticScene> generate_synthetic_scenes(std::uint64_t seed, const SynthSpec& spec)
{
    if (spec.n_hos < 0 || spec.n_hps < 0)
        throw InvalidArgument("instance counts must be non-negative");
    if (spec.pano_width < 4 || spec.pano_height < 2)
        throw InvalidArgument("panorama size too small");

    SplitRng rng(seed);
    std::vector<SyntheticScene> scenes;
    scenes.reserve(static_cast<std::size_t>(spec.n_hos + spec.n_hps));
    for (int i = 0; i < spec.n_hos; ++i)
        scenes.push_back(make_hos_scene(rng, i, spec, seed));
    for (int i = 0; i < spec.n_hps; ++i)
        scenes.push_back(make_hps_scene(rng, i, spec, seed));
    return scenes;
}

Dataset generate_synthetic(std::uint64_t seed, const SynthSpec& spec, const std::filesystem::path& outDir)
{
    auto scenes = generate_synthetic_scenes(seed, spec);

    Dataset ds;
    ds.base_dir = outDir;
    ds.extra["generator"] = {{"seed", seed}, {"pano_width", spec.pano_width}, {"pano_height", spec.pano_height}};
    if (scenes.empty())
        return ds;

    for (auto& scene: scenes)
    {
        write_png(outDir / scene.task.panorama_ref, scene.panorama.pixels());
        ds.instances.push_back(std::move(scene.task));
    }
    write_dataset_file(ds, outDir / "manifest.jsonl");
    return ds;
}

} // namespace panosearch
