// SPDX-License-Identifier: Apache-2.0
#pragma once

// Equirectangular panorama sampling and pinhole perspective views.
//
// Pixel coordinates are continuous with integer values at pixel centres, so
// the image spans [-0.5, W - 0.5] x [-0.5, H - 0.5]. The principal point is
// the centre of pixel (W / 2, H / 2) (integer division); its ray is exactly the
// view direction. Image y grows downward.

#include <panosearch/geometry.hpp>
#include <panosearch/image.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace panosearch
{

class Panorama
{
  public:
    Panorama(RgbImage pixels, std::string sourceId);

    /// Loads a PNG or JPEG panorama; `source_id` defaults to the file name.
    static Panorama load(const std::filesystem::path& path, std::string sourceId = {});

    [[nodiscard]] int width_px() const noexcept { return pixels_.width(); }
    [[nodiscard]] int height_px() const noexcept { return pixels_.height(); }
    [[nodiscard]] const RgbImage& pixels() const noexcept { return pixels_; }
    [[nodiscard]] const std::string& source_id() const noexcept { return sourceId_; }

    /// True when the raster is not 2:1.
    [[nodiscard]] bool aspect_warning() const noexcept { return width_px() != 2 * height_px(); }

  private:
    RgbImage pixels_;
    std::string sourceId_;
};

class ViewSpec
{
  public:
    ViewSpec() = default;
    ViewSpec(int widthPx, int heightPx, double hfovDeg);

    [[nodiscard]] int width_px() const noexcept { return width_; }
    [[nodiscard]] int height_px() const noexcept { return height_; }
    [[nodiscard]] double hfov_deg() const noexcept { return hfov_; }
    [[nodiscard]] double vfov_deg() const noexcept;
    [[nodiscard]] double focal_px() const noexcept;

    [[nodiscard]] int center_x() const noexcept { return width_ / 2; }
    [[nodiscard]] int center_y() const noexcept { return height_ / 2; }

    static ViewSpec evaluation() { return {1920, 1080, 90.0}; }
    static ViewSpec training() { return {1280, 720, 90.0}; }

    friend bool operator==(const ViewSpec&, const ViewSpec&) = default;

  private:
    int width_ = 1920;
    int height_ = 1080;
    double hfov_ = 90.0;
};

struct ViewImage
{
    RgbImage pixels;
    Direction direction;
    ViewSpec spec;
    bool crosshair_drawn = false;
};

struct PixelCoord
{
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned pixel rectangle [x0, x1] x [y0, y1] in continuous coordinates.
struct PixelRect
{
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;
};

/// Bilinear lookup with horizontal wrap and vertical clamp.
Rgb equirect_sample(const Panorama& pano, const Direction& d);

ViewImage render_view(const Panorama& pano, const Direction& d, const ViewSpec& spec);

/// Draws the pure-green centre cross. Throws InvalidState if already drawn.
ViewImage overlay_crosshair(ViewImage img);

/// Crosshair arm length in pixels: 2% of the width, at least 8.
int crosshair_arm_px(int imageWidth) noexcept;

PixelCoord view_center(const ViewSpec& spec) noexcept;

/// World direction of the ray through `px`. Throws InvalidArgument out of bounds.
Direction pixel_to_direction(const Direction& viewDir, const ViewSpec& spec, PixelCoord px);

/// Forward projection; nullopt when `d` is behind the camera. The result may lie outside the image.
std::optional<PixelCoord> direction_to_pixel(const Direction& viewDir, const ViewSpec& spec, const Direction& d);

bool in_image(const ViewSpec& spec, PixelCoord px) noexcept;

/// Angular box of a rectangle drawn on a view: centre from the rectangle centre,
/// extents from the largest pairwise separation of the four back-projected corners.
AngularBox backproject_bbox(const Direction& viewDir, const ViewSpec& spec, const PixelRect& rect);

} // namespace panosearch
