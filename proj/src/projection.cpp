// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/projection.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace panosearch
{

Panorama::Panorama(RgbImage pixels, std::string sourceId): pixels_(std::move(pixels)), sourceId_(std::move(sourceId))
{
    if (pixels_.width() < 4 || pixels_.height() < 2)
        throw InvalidArgument("panorama must be at least 4x2 pixels");
}

Panorama Panorama::load(const std::filesystem::path& path, std::string sourceId)
{
    if (!std::filesystem::exists(path))
        throw ResourceError("panorama not found: " + path.string());
    if (sourceId.empty())
        sourceId = path.filename().string();
    return Panorama(read_image(path), std::move(sourceId));
}

ViewSpec::ViewSpec(int widthPx, int heightPx, double hfovDeg): width_(widthPx), height_(heightPx), hfov_(hfovDeg)
{
    // below 4 px the centre cross would reach the corners
    if (widthPx < 4 || heightPx < 4)
        throw InvalidArgument("view must be at least 4x4 pixels");
    if (!(hfovDeg > 0.0 && hfovDeg < 180.0))
        throw InvalidArgument("hfov must be in (0, 180) degrees");
}

double ViewSpec::vfov_deg() const noexcept
{
    return rad_to_deg(2.0 * std::atan(std::tan(deg_to_rad(hfov_) / 2.0) * height_ / width_));
}

double ViewSpec::focal_px() const noexcept
{
    return (width_ / 2.0) / std::tan(deg_to_rad(hfov_) / 2.0);
}

namespace
{

struct CameraFrame
{
    Vec3 forward;
    Vec3 right;
    Vec3 up;
};

CameraFrame camera_frame(const Direction& d)
{
    double const yaw = deg_to_rad(d.yaw_deg());
    double const pitch = deg_to_rad(d.pitch_deg());
    double const sy = std::sin(yaw), cy = std::cos(yaw);
    double const sp = std::sin(pitch), cp = std::cos(pitch);
    return {
        {cp * sy, sp, cp * cy},
        {cy, 0.0, -sy},
        {-sp * sy, cp, -sp * cy},
    };
}

Rgb sample_continuous(const RgbImage& img, double u, double v)
{
    int const w = img.width();
    int const h = img.height();
    double const x = u - 0.5;
    double const y = v - 0.5;
    double const xf = std::floor(x);
    double const yf = std::floor(y);
    double const fx = x - xf;
    double const fy = y - yf;

    int x0 = static_cast<int>(xf) % w;
    if (x0 < 0)
        x0 += w;
    int const x1 = (x0 + 1) % w;
    int const y0 = std::clamp(static_cast<int>(yf), 0, h - 1);
    int const y1 = std::clamp(static_cast<int>(yf) + 1, 0, h - 1);

    Rgb const c00 = img.at(x0, y0), c10 = img.at(x1, y0);
    Rgb const c01 = img.at(x0, y1), c11 = img.at(x1, y1);
    auto lerp2 = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
        double const top = a + (b - a) * fx;
        double const bottom = c + (d - c) * fx;
        double const val = top + (bottom - top) * fy;
        return static_cast<std::uint8_t>(std::clamp(val + 0.5, 0.0, 255.0));
    };
    return {
        lerp2(c00.r, c10.r, c01.r, c11.r),
        lerp2(c00.g, c10.g, c01.g, c11.g),
        lerp2(c00.b, c10.b, c01.b, c11.b),
    };
}

Rgb sample_degrees(const RgbImage& img, double yawDeg, double pitchDeg)
{
    double const u = yawDeg / 360.0 * img.width();
    double const v = (90.0 - pitchDeg) / 180.0 * img.height();
    return sample_continuous(img, u, v);
}

Vec3 pixel_ray(const CameraFrame& frame, const ViewSpec& spec, PixelCoord px)
{
    double const f = spec.focal_px();
    double const dx = (px.x - spec.center_x()) / f;
    double const dy = -(px.y - spec.center_y()) / f;
    return frame.forward + dx * frame.right + dy * frame.up;
}

} // namespace

Rgb equirect_sample(const Panorama& pano, const Direction& d)
{
    return sample_degrees(pano.pixels(), d.yaw_deg(), d.pitch_deg());
}

ViewImage render_view(const Panorama& pano, const Direction& d, const ViewSpec& spec)
{
    ViewImage out {RgbImage(spec.width_px(), spec.height_px()), d, spec, false};
    auto const frame = camera_frame(d);
    double const f = spec.focal_px();
    int const cx = spec.center_x();
    int const cy = spec.center_y();
    auto const& src = pano.pixels();

    for (int j = 0; j < spec.height_px(); ++j)
    {
        double const dy = -(j - cy) / f;
        Vec3 const rowBase = frame.forward + dy * frame.up;
        for (int i = 0; i < spec.width_px(); ++i)
        {
            if (i == cx && j == cy)
            {
                out.pixels.set(i, j, equirect_sample(pano, d));
                continue;
            }
            double const dx = (i - cx) / f;
            Vec3 const ray = rowBase + dx * frame.right;
            double const horizontal = std::sqrt(ray.x * ray.x + ray.z * ray.z);
            double yaw = rad_to_deg(std::atan2(ray.x, ray.z));
            if (yaw < 0.0)
                yaw += 360.0;
            double const pitch = rad_to_deg(std::atan2(ray.y, horizontal));
            out.pixels.set(i, j, sample_degrees(src, yaw, pitch));
        }
    }
    return out;
}

int crosshair_arm_px(int imageWidth) noexcept
{
    return std::max(8, static_cast<int>(std::lround(0.02 * imageWidth)));
}

ViewImage overlay_crosshair(ViewImage img)
{
    if (img.crosshair_drawn)
        throw InvalidState("crosshair already drawn on this view");

    constexpr Rgb kGreen {0, 255, 0};
    int const w = img.pixels.width();
    int const h = img.pixels.height();
    int const cx = w / 2;
    int const cy = h / 2;
    int const arm = crosshair_arm_px(w);

    for (int y = std::max(0, cy - 1); y <= std::min(h - 1, cy + 1); ++y)
        for (int x = std::max(0, cx - arm); x <= std::min(w - 1, cx + arm); ++x)
            img.pixels.set(x, y, kGreen);
    for (int y = std::max(0, cy - arm); y <= std::min(h - 1, cy + arm); ++y)
        for (int x = std::max(0, cx - 1); x <= std::min(w - 1, cx + 1); ++x)
            img.pixels.set(x, y, kGreen);

    img.crosshair_drawn = true;
    return img;
}

PixelCoord view_center(const ViewSpec& spec) noexcept
{
    return {static_cast<double>(spec.center_x()), static_cast<double>(spec.center_y())};
}

bool in_image(const ViewSpec& spec, PixelCoord px) noexcept
{
    return px.x >= -0.5 && px.x <= spec.width_px() - 0.5 && px.y >= -0.5 && px.y <= spec.height_px() - 0.5;
}

Direction pixel_to_direction(const Direction& viewDir, const ViewSpec& spec, PixelCoord px)
{
    if (!std::isfinite(px.x) || !std::isfinite(px.y) || !in_image(spec, px))
        throw InvalidArgument("pixel coordinate outside the image");
    if (px.x == spec.center_x() && px.y == spec.center_y())
        return viewDir;
    return unit_vector_to_direction(pixel_ray(camera_frame(viewDir), spec, px));
}

std::optional<PixelCoord> direction_to_pixel(const Direction& viewDir, const ViewSpec& spec, const Direction& d)
{
    auto const frame = camera_frame(viewDir);
    Vec3 const v = direction_to_unit_vector(d);
    double const z = v.dot(frame.forward);
    if (z <= 1e-12)
        return std::nullopt;
    double const f = spec.focal_px();
    return PixelCoord {
        spec.center_x() + f * v.dot(frame.right) / z,
        spec.center_y() - f * v.dot(frame.up) / z,
    };
}

AngularBox backproject_bbox(const Direction& viewDir, const ViewSpec& spec, const PixelRect& rect)
{
    if (!(rect.x1 > rect.x0) || !(rect.y1 > rect.y0))
        throw InvalidArgument("rectangle must have positive area");
    if (!in_image(spec, {rect.x0, rect.y0}) || !in_image(spec, {rect.x1, rect.y1}))
        throw InvalidArgument("rectangle must lie within the image");

    Direction const center = pixel_to_direction(viewDir, spec, {(rect.x0 + rect.x1) / 2.0, (rect.y0 + rect.y1) / 2.0});
    std::array<Direction, 4> const corners {
        pixel_to_direction(viewDir, spec, {rect.x0, rect.y0}),
        pixel_to_direction(viewDir, spec, {rect.x1, rect.y0}),
        pixel_to_direction(viewDir, spec, {rect.x0, rect.y1}),
        pixel_to_direction(viewDir, spec, {rect.x1, rect.y1}),
    };

    double width = 0.0;
    double height = 0.0;
    for (std::size_t a = 0; a < corners.size(); ++a)
        for (std::size_t b = a + 1; b < corners.size(); ++b)
        {
            width = std::max(width, std::fabs(angular_diff(corners[a].yaw_deg(), corners[b].yaw_deg())));
            height = std::max(height, std::fabs(corners[a].pitch_deg() - corners[b].pitch_deg()));
        }
    return AngularBox(center, width, height);
}

} // namespace panosearch
