// SPDX-License-Identifier: Apache-2.0
#include <panosearch/errors.hpp>
#include <panosearch/image.hpp>

#include <openssl/evp.h>

#include <png.h>

#include <jpeglib.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

namespace panosearch
{

RgbImage::RgbImage(int width, int height, Rgb fill): width_(width), height_(height)
{
    if (width <= 0 || height <= 0)
        throw InvalidArgument("image dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3)
    {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
    }
}

namespace
{

struct PngWriteContext
{
    std::vector<std::uint8_t>* out;
};

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length)
{
    auto* ctx = static_cast<PngWriteContext*>(png_get_io_ptr(png));
    ctx->out->insert(ctx->out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct PngReadContext
{
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length)
{
    auto* ctx = static_cast<PngReadContext*>(png_get_io_ptr(png));
    if (ctx->pos + length > ctx->data.size())
        png_error(png, "truncated PNG stream");
    std::memcpy(out, ctx->data.data() + ctx->pos, length);
    ctx->pos += length;
}

bool is_png(std::span<const std::uint8_t> data)
{
    return data.size() >= 8 && png_sig_cmp(data.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> data)
{
    return data.size() >= 3 && data[0] == 0xFF && data[1] == 0xD8 && data[2] == 0xFF;
}

struct JpegErrorManager
{
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

[[noreturn]] void jpeg_error_exit(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

} // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& img)
{
    if (img.empty())
        throw InvalidArgument("cannot encode an empty image");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info)
    {
        png_destroy_write_struct(&png, &info);
        throw ResourceError("libpng initialisation failed");
    }

    std::vector<std::uint8_t> out;
    PngWriteContext ctx {&out};
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));

    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_write_struct(&png, &info);
        throw ResourceError("PNG encoding failed");
    }

    png_set_write_fn(png, &ctx, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png,
                 info,
                 static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()),
                 8,
                 PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    // speed over size; observations are written every turn
    png_set_compression_level(png, 1);
    png_write_info(png, info);

    auto* base = const_cast<std::uint8_t*>(img.bytes().data());
    for (int y = 0; y < img.height(); ++y)
        rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width()) * 3;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

RgbImage decode_png(std::span<const std::uint8_t> data)
{
    if (!is_png(data))
        throw ResourceError("not a PNG stream");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info)
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ResourceError("libpng initialisation failed");
    }

    PngReadContext ctx {data, 0};
    RgbImage img;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ResourceError("PNG decoding failed");
    }

    png_set_read_fn(png, &ctx, png_read_from_span);
    png_read_info(png, info);

    // normalise everything to 8-bit RGB
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    auto const colorType = png_get_color_type(png, info);
    if (colorType == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (colorType == PNG_COLOR_TYPE_GRAY || colorType == PNG_COLOR_TYPE_GRAY_ALPHA)
    {
        png_set_expand_gray_1_2_4_to_8(png);
        png_set_gray_to_rgb(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    auto const width = static_cast<int>(png_get_image_width(png, info));
    auto const height = static_cast<int>(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3)
        png_error(png, "unsupported channel layout");

    img = RgbImage(width, height);
    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<std::size_t>(y)] = img.bytes().data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width) * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

RgbImage decode_jpeg(std::span<const std::uint8_t> data)
{
    if (!is_jpeg(data))
        throw ResourceError("not a JPEG stream");

    jpeg_decompress_struct cinfo {};
    JpegErrorManager err {};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;

    // Only trivially destructible locals live across the setjmp boundary.
    RgbImage* result = nullptr;
    if (setjmp(err.jump))
    {
        jpeg_destroy_decompress(&cinfo);
        delete result;
        throw ResourceError("JPEG decoding failed");
    }

    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    result = new RgbImage(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
    auto const stride = static_cast<std::size_t>(cinfo.output_width) * 3;
    while (cinfo.output_scanline < cinfo.output_height)
    {
        JSAMPROW row = result->bytes().data() + static_cast<std::size_t>(cinfo.output_scanline) * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    RgbImage img = std::move(*result);
    delete result;
    return img;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ResourceError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RgbImage read_image(const std::filesystem::path& path)
{
    auto const bytes = read_file_bytes(path);
    try
    {
        if (is_png(bytes))
            return decode_png(bytes);
        if (is_jpeg(bytes))
            return decode_jpeg(bytes);
    }
    catch (const ResourceError& e)
    {
        throw ResourceError(path.string() + ": " + e.what());
    }
    throw ResourceError(path.string() + ": unsupported image format (expected PNG or JPEG)");
}

void write_png(const std::filesystem::path& path, const RgbImage& img)
{
    auto const bytes = encode_png(img);
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ResourceError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ResourceError("short write to " + path.string());
}

std::string base64_encode(std::span<const std::uint8_t> data)
{
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    auto const n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0)
        throw InvalidArgument("base64 input length must be a multiple of 4");
    std::vector<std::uint8_t> out(3 * text.size() / 4);
    auto const n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0)
        throw InvalidArgument("malformed base64 input");
    // EVP_DecodeBlock keeps the padding bytes as zeros
    std::size_t padding = 0;
    if (!text.empty() && text.back() == '=')
        ++padding;
    if (text.size() > 1 && text[text.size() - 2] == '=')
        ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

} // namespace panosearch
