// SPDX-License-Identifier: Apache-2.0
#pragma once

// Angular primitives shared by the environment, scoring and annotation code.
//
// Conventions:
//  * yaw is circular and always stored in [0, 360); positive deltas turn right
//  * pitch is clamped to [-90, +90]; positive is up
//  * world frame: +z forward (yaw 0, pitch 0), +x right (yaw 90), +y up (pitch 90)
//
// All public angles are degrees. Only the interval distance used by the
// distance-to-goal reward works in radians.

#include <numbers>

namespace panosearch
{

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / kPi; }

/// Wraps any finite angle into [0, 360). Throws InvalidArgument on NaN/inf.
double wrap_yaw(double angleDeg);

/// Signed shortest rotation taking `b` to `a`, in (-180, +180]. A half-turn resolves to +180.
double angular_diff(double aDeg, double bDeg);

/// A viewing direction. Construction wraps yaw and clamps pitch.
class Direction
{
  public:
    constexpr Direction() noexcept = default;
    Direction(double yawDeg, double pitchDeg);

    [[nodiscard]] double yaw_deg() const noexcept { return yaw_; }
    [[nodiscard]] double pitch_deg() const noexcept { return pitch_; }

    /// Returns this direction turned by (dyaw, dpitch): yaw wraps, pitch clamps.
    [[nodiscard]] Direction rotated(double dyawDeg, double dpitchDeg) const;

    friend bool operator==(const Direction&, const Direction&) = default;

  private:
    double yaw_ = 0.0;
    double pitch_ = 0.0;
};

/// Annotated target: center direction plus angular width (yaw) and height (pitch).
class AngularBox
{
  public:
    AngularBox() = default;
    AngularBox(Direction center, double widthDeg, double heightDeg);

    [[nodiscard]] const Direction& center() const noexcept { return center_; }
    [[nodiscard]] double width_deg() const noexcept { return width_; }
    [[nodiscard]] double height_deg() const noexcept { return height_; }

    friend bool operator==(const AngularBox&, const AngularBox&) = default;

  private:
    Direction center_;
    double width_ = 1.0;
    double height_ = 1.0;
};

/// Base tolerances of the success region. HPS only checks yaw.
struct ToleranceSpec
{
    double base_yaw_deg = 30.0;
    double base_pitch_deg = 20.0;
    bool pitch_checked = true;

    static constexpr ToleranceSpec object_search() noexcept { return {30.0, 20.0, true}; }
    static constexpr ToleranceSpec path_search() noexcept { return {10.0, 0.0, false}; }

    friend bool operator==(const ToleranceSpec&, const ToleranceSpec&) = default;
};

struct EffectiveTolerance
{
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
};

/// Per-axis tolerance: max(half box extent, base tolerance).
EffectiveTolerance effective_tolerance(const AngularBox& box, const ToleranceSpec& spec) noexcept;

/// Closed per-axis membership test in the box-centred tolerance rectangle.
bool in_tolerance_region(const Direction& submitted, const AngularBox& box, const ToleranceSpec& spec);

/// Distance from `alpha` to the circular interval [alphaStar - tau, alphaStar + tau], radians.
///
/// Evaluates |a - (a* - tau)| + |a - (a* + tau)| with `alpha` unwrapped to the
/// representative nearest `alphaStar`. The result is 2*tau everywhere inside the
/// interval, grows strictly with circular distance outside it, and never exceeds 2*pi.
double interval_distance(double alphaRad, double alphaStarRad, double tauRad);

/// Same distance on a non-wrapping axis (pitch).
double linear_interval_distance(double alphaRad, double alphaStarRad, double tauRad);

struct Vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator*(double s, Vec3 v) noexcept { return {s * v.x, s * v.y, s * v.z}; }
    [[nodiscard]] double dot(Vec3 o) const noexcept { return x * o.x + y * o.y + z * o.z; }
    [[nodiscard]] double norm() const noexcept;
};

Vec3 direction_to_unit_vector(const Direction& d) noexcept;

/// Inverse of direction_to_unit_vector. At the poles yaw is reported as 0.
/// Throws InvalidArgument for the zero vector.
Direction unit_vector_to_direction(Vec3 v);

} // namespace panosearch
