// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace panosearch
{

struct Rgb
{
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major, tightly packed RGB8 raster.
class RgbImage
{
  public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {});

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

    [[nodiscard]] Rgb at(int x, int y) const noexcept
    {
        auto const* p = &pixels_[offset(x, y)];
        return {p[0], p[1], p[2]};
    }

    void set(int x, int y, Rgb c) noexcept
    {
        auto* p = &pixels_[offset(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    [[nodiscard]] std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
    [[nodiscard]] std::span<std::uint8_t> bytes() noexcept { return pixels_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

  private:
    [[nodiscard]] std::size_t offset(int x, int y) const noexcept
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

std::vector<std::uint8_t> encode_png(const RgbImage& img);
RgbImage decode_png(std::span<const std::uint8_t> data);
RgbImage decode_jpeg(std::span<const std::uint8_t> data);

/// Reads a PNG or JPEG file (detected by magic bytes) as RGB8.
RgbImage read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> base64_decode(std::string_view text);

} // namespace panosearch
