#pragma once

// PNG and JPEG file I/O on top of libpng / libjpeg. Images are decoded to
// 8-bit RGB; masks are written as single-channel PNGs (0 / 255) and read back
// by thresholding at mid-grey so anti-aliased expert masks load sanely.

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "lesionseg/raster.hpp"

namespace lesionseg {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return f;
}

[[noreturn]] inline void png_error_handler(png_structp png, png_const_charp msg) {
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg ? msg : "unknown";
    std::longjmp(png_jmpbuf(png), 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    std::string message;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    char buf[JMSG_LENGTH_MAX];
    (*cinfo->err->format_message)(cinfo, buf);
    err->message = buf;
    std::longjmp(err->jump, 1);
}

inline RasterImage read_png(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    std::string errmsg;
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_handler,
                               png_warning_handler);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }

    std::vector<png_bytep> row_ptrs;
    std::vector<std::uint8_t> buf;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(path.string() + ": " + errmsg);
    }

    png_init_io(png, f.get());
    png_read_info(png, info);

    // normalize every layout to 8-bit RGB
    png_set_expand(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const auto w = static_cast<int>(png_get_image_width(png, info));
    const auto h = static_cast<int>(png_get_image_height(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    if (stride < static_cast<std::size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(path.string() + ": unexpected row size after transforms");
    }

    buf.resize(stride * static_cast<std::size_t>(h));
    row_ptrs.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) row_ptrs[static_cast<std::size_t>(y)] = buf.data() + stride * y;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RasterImage img(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = buf.data() + stride * y;
        for (int x = 0; x < w; ++x)
            img.at(x, y) = Rgb{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
    }
    return img;
}

inline RasterImage read_jpeg(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error(path.string() + ": " + err.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    RasterImage img(w, h);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 3);
    JSAMPROW rows[1] = {row.data()};
    while (cinfo.output_scanline < cinfo.output_height) {
        const int y = static_cast<int>(cinfo.output_scanline);
        jpeg_read_scanlines(&cinfo, rows, 1);
        for (int x = 0; x < w; ++x)
            img.at(x, y) = Rgb{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace detail

/// Loads a .png/.jpg/.jpeg image as 8-bit RGB. The extension picks the codec.
inline RasterImage read_image(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".png") return detail::read_png(path);
    if (ext == ".jpg" || ext == ".jpeg") return detail::read_jpeg(path);
    throw std::runtime_error("unsupported image format: " + path.string());
}

/// Writes an RGB PNG.
inline void write_image(const std::filesystem::path& path, const RasterImage& img) {
    detail::FilePtr f = detail::open_file(path, "wb");
    std::string errmsg;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg, detail::png_error_handler,
                                detail::png_warning_handler);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    std::vector<std::uint8_t> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error(path.string() + ": " + errmsg);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    row.resize(static_cast<std::size_t>(img.width()) * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Rgb& px = img.at(x, y);
            row[3 * x] = px.r;
            row[3 * x + 1] = px.g;
            row[3 * x + 2] = px.b;
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// Loads a binary mask: any pixel with luminance above 127 counts as lesion.
inline BinaryMask read_mask(const std::filesystem::path& path) {
    const RasterImage img = read_image(path);
    BinaryMask mask(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const Rgb& px = img.at(x, y);
            const double lum = 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
            mask.set(x, y, lum > 127.0);
        }
    return mask;
}

/// Writes a mask as an 8-bit grayscale PNG (lesion = 255).
inline void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
    detail::FilePtr f = detail::open_file(path, "wb");
    std::string errmsg;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg, detail::png_error_handler,
                                detail::png_warning_handler);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    std::vector<std::uint8_t> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error(path.string() + ": " + errmsg);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width()),
                 static_cast<png_uint_32>(mask.height()), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    row.resize(static_cast<std::size_t>(mask.width()));
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) row[x] = mask.at(x, y) ? 255 : 0;
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace lesionseg
