// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace panosearch
{

namespace
{

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v))
        throw InvalidArgument(std::string(what) + " must be finite");
}

// Circular distance on a 2*pi circle, in [0, pi].
double circular_abs(double rad)
{
    double r = std::fmod(std::fabs(rad), 2.0 * kPi);
    return r > kPi ? 2.0 * kPi - r : r;
}

} // namespace

double wrap_yaw(double angleDeg)
{
    require_finite(angleDeg, "angle");
    double r = std::fmod(angleDeg, 360.0);
    if (r < 0.0)
        r += 360.0;
    // -tiny + 360 rounds to 360
    if (r >= 360.0)
        r = 0.0;
    return r;
}

double angular_diff(double aDeg, double bDeg)
{
    require_finite(aDeg, "angle");
    require_finite(bDeg, "angle");
    double d = wrap_yaw(aDeg - bDeg);
    return d > 180.0 ? d - 360.0 : d;
}

Direction::Direction(double yawDeg, double pitchDeg)
{
    require_finite(pitchDeg, "pitch");
    yaw_ = wrap_yaw(yawDeg);
    pitch_ = std::clamp(pitchDeg, -90.0, 90.0);
}

Direction Direction::rotated(double dyawDeg, double dpitchDeg) const
{
    return Direction(yaw_ + dyawDeg, pitch_ + dpitchDeg);
}

AngularBox::AngularBox(Direction center, double widthDeg, double heightDeg):
    center_(center), width_(widthDeg), height_(heightDeg)
{
    if (!(widthDeg > 0.0 && widthDeg <= 360.0))
        throw InvalidArgument("box width must be in (0, 360]");
    if (!(heightDeg > 0.0 && heightDeg <= 180.0))
        throw InvalidArgument("box height must be in (0, 180]");
}

EffectiveTolerance effective_tolerance(const AngularBox& box, const ToleranceSpec& spec) noexcept
{
    return {
        std::max(box.width_deg() / 2.0, spec.base_yaw_deg),
        std::max(box.height_deg() / 2.0, spec.base_pitch_deg),
    };
}

bool in_tolerance_region(const Direction& submitted, const AngularBox& box, const ToleranceSpec& spec)
{
    auto const tau = effective_tolerance(box, spec);
    if (std::fabs(angular_diff(submitted.yaw_deg(), box.center().yaw_deg())) > tau.yaw_deg)
        return false;
    if (spec.pitch_checked && std::fabs(submitted.pitch_deg() - box.center().pitch_deg()) > tau.pitch_deg)
        return false;
    return true;
}

double interval_distance(double alphaRad, double alphaStarRad, double tauRad)
{
    // nearest representative of alpha relative to alpha*, then the raw two-term formula
    double const offset = circular_abs(alphaRad - alphaStarRad);
    return std::fabs(offset + tauRad) + std::fabs(offset - tauRad);
}

double linear_interval_distance(double alphaRad, double alphaStarRad, double tauRad)
{
    return std::fabs(alphaRad - (alphaStarRad - tauRad)) + std::fabs(alphaRad - (alphaStarRad + tauRad));
}

double Vec3::norm() const noexcept
{
    return std::sqrt(x * x + y * y + z * z);
}

Vec3 direction_to_unit_vector(const Direction& d) noexcept
{
    double const yaw = deg_to_rad(d.yaw_deg());
    double const pitch = deg_to_rad(d.pitch_deg());
    double const c = std::cos(pitch);
    return {c * std::sin(yaw), std::sin(pitch), c * std::cos(yaw)};
}

Direction unit_vector_to_direction(Vec3 v)
{
    double const n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw InvalidArgument("direction vector must be non-zero and finite");
    double const horizontal = std::hypot(v.x, v.z);
    if (horizontal <= 1e-15 * n)
        return Direction(0.0, v.y > 0.0 ? 90.0 : -90.0);
    double const pitch = rad_to_deg(std::atan2(v.y, horizontal));
    double const yaw = rad_to_deg(std::atan2(v.x, v.z));
    return Direction(yaw, pitch);
}

} // namespace panosearch
