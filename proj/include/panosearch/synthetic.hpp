// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic synthetic scenes with known ground truth. HOS scenes plant a
// uniquely coloured spherical disc; HPS scenes plant a floor stripe whose
// heading is the target yaw. Both sit on a smooth, seam-continuous background.

#include <panosearch/projection.hpp>
#include <panosearch/tasks.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace panosearch
{

struct SynthSpec
{
    int n_hos = 0;
    int n_hps = 0;
    int pano_width = 2048;
    int pano_height = 1024;
    ViewSpec visibility_view = ViewSpec::evaluation(); ///< used for HOS visibility ratios
};

struct SyntheticScene
{
    Panorama panorama;
    TaskInstance task;
    Rgb target_color;
    double disc_radius_deg = 0.0; ///< HOS only
};

/// Tiny portable RNG wrapper so generated data is identical across standard libraries.
class SplitRng
{
  public:
    explicit SplitRng(std::uint64_t seed) noexcept: state_(seed) {}

    std::uint64_t next() noexcept;
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) noexcept;
    /// Uniform integer in [lo, hi].
    int integer(int lo, int hi) noexcept;
    bool chance(double p) noexcept { return uniform(0.0, 1.0) < p; }

  private:
    std::uint64_t state_;
};

/// Smooth background colour for a direction.
Rgb background_color(double yawDeg, double pitchDeg, std::uint64_t seed) noexcept;

std::vector<SyntheticScene> generate_synthetic_scenes(std::uint64_t seed, const SynthSpec& spec);

/// Generates scenes and writes `panos/<id>.png` plus `manifest.jsonl` under `outDir`.
/// With no instances requested nothing is written and the dataset is empty.
Dataset generate_synthetic(std::uint64_t seed, const SynthSpec& spec, const std::filesystem::path& outDir);

} // namespace panosearch
