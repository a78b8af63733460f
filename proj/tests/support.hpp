// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared helpers for the test binaries: seeded generators and scratch dirs.

#include <panosearch/geometry.hpp>
#include <panosearch/image.hpp>
#include <panosearch/projection.hpp>
#include <panosearch/tasks.hpp>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

namespace pstest
{

using namespace panosearch;

class Gen
{
  public:
    explicit Gen(std::uint64_t seed): rng_(seed) {}

    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }

    Direction direction() { return Direction(real(0.0, 360.0), real(-90.0, 90.0)); }

    /// Boxes fully inside the sphere's pitch range.
    AngularBox box()
    {
        double const h = real(0.5, 80.0);
        double const pitch = real(-90.0 + h / 2, 90.0 - h / 2);
        return AngularBox(Direction(real(0.0, 360.0), pitch), real(0.5, 200.0), h);
    }

    std::mt19937_64& engine() { return rng_; }

  private:
    std::mt19937_64 rng_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir
{
  public:
    explicit ScratchDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path()
            / ("panosearch-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

  private:
    std::filesystem::path path_;
};

inline TaskInstance make_task(TaskType type, AngularBox target, std::string id = "t-0")
{
    TaskInstance t;
    t.id = std::move(id);
    t.task_type = type;
    t.panorama_ref = "panos/none.png";
    t.instruction = type == TaskType::HOS ? "Find the coffee machine." : "Go to the door.";
    t.target = target;
    t.difficulty = {DifficultyLevel::Easy, DifficultyBasis::Annotated};
    if (type == TaskType::HPS)
        t.hps_cues = HpsCues {true, true};
    else
        t.visibility_ratios = std::array<double, 4> {1.0, 1.0, 1.0, 1.0};
    return t;
}

/// Paints every panorama pixel whose centre lies within `radiusDeg` of `centre`.
inline void paint_disc(RgbImage& pano, const Direction& centre, double radiusDeg, Rgb colour)
{
    auto const c = direction_to_unit_vector(centre);
    double const cosR = std::cos(deg_to_rad(radiusDeg));
    int const w = pano.width();
    int const h = pano.height();
    for (int y = 0; y < h; ++y)
    {
        double const pitch = 90.0 - (y + 0.5) * 180.0 / h;
        if (std::fabs(pitch - centre.pitch_deg()) > radiusDeg + 1.0)
            continue;
        for (int x = 0; x < w; ++x)
        {
            double const yaw = (x + 0.5) * 360.0 / w;
            if (direction_to_unit_vector(Direction(yaw, pitch)).dot(c) >= cosR)
                pano.set(x, y, colour);
        }
    }
}

/// Intensity-weighted centroid of pixels differing from `background` in the red channel.
inline std::optional<PixelCoord> marker_centroid(const RgbImage& img, std::uint8_t background)
{
    double sx = 0, sy = 0, sw = 0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
        {
            double const wgt = std::abs(int(img.at(x, y).r) - int(background));
            sx += wgt * x;
            sy += wgt * y;
            sw += wgt;
        }
    if (sw == 0)
        return std::nullopt;
    return PixelCoord {sx / sw, sy / sw};
}

} // namespace pstest
