// ============================================================================
// codec.hpp - PNG and JPEG image file I/O (libpng / libjpeg)
//
// load_image sniffs the format from the file signature and always returns a
// 3-channel tensor with values mapped from [0,255] to [0,1]. save_png writes
// 8-bit RGB and is byte-deterministic for fixed pixel content.
// ============================================================================

#pragma once

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "pardinus/image.hpp"

namespace pardinus {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        if (mode[0] == 'r' && !std::filesystem::exists(path))
            throw FileNotFound("no such file: " + path);
        throw IoError("cannot open: " + path);
    }
    return f;
}

// interleaved 8-bit RGB rows -> channel-major float tensor
inline ImageTensor from_rgb8(const std::vector<unsigned char>& rgb, int h, int w) {
    ImageTensor img(3, h, w);
    const std::size_t pixels = std::size_t(h) * w;
    for (std::size_t i = 0; i < pixels; ++i) {
        img.data[i] = rgb[3 * i] / 255.0f;
        img.data[pixels + i] = rgb[3 * i + 1] / 255.0f;
        img.data[2 * pixels + i] = rgb[3 * i + 2] / 255.0f;
    }
    return img;
}

inline ImageTensor load_png(const std::string& path) {
    FilePtr f = open_file(path, "rb");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DecodeError("png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DecodeError("png: allocation failed");
    }

    std::vector<unsigned char> rgb;
    std::vector<png_bytep> rows;
    int w = 0, h = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("png: corrupt file: " + path);
    }

    png_init_io(png, f.get());
    png_read_info(png, info);

    w = int(png_get_image_width(png, info));
    h = int(png_get_image_height(png, info));
    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    // normalize every variant to 8-bit RGB
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_strip_alpha(png);
    png_read_update_info(png, info);

    rgb.resize(std::size_t(h) * w * 3);
    rows.resize(h);
    for (int y = 0; y < h; ++y) rows[y] = rgb.data() + std::size_t(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    return from_rgb8(rgb, h, w);
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

inline ImageTensor load_jpeg(const std::string& path) {
    FilePtr f = open_file(path, "rb");

    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError("jpeg: corrupt file: " + path);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int w = int(cinfo.output_width);
    const int h = int(cinfo.output_height);
    std::vector<unsigned char> rgb(std::size_t(h) * w * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = rgb.data() + std::size_t(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    return from_rgb8(rgb, h, w);
}

} // namespace detail

inline ImageTensor load_image(const std::string& path) {
    detail::FilePtr f = detail::open_file(path, "rb");
    unsigned char sig[8] = {};
    const std::size_t got = std::fread(sig, 1, sizeof sig, f.get());
    f.reset();

    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) return detail::load_png(path);
    if (got >= 2 && sig[0] == 0xFF && sig[1] == 0xD8) return detail::load_jpeg(path);
    throw DecodeError("unsupported image format: " + path);
}

inline void save_jpeg(const ImageTensor& img, const std::string& path, int quality = 95) {
    if (img.channels != 3) throw ModeMismatch("save_jpeg: expects a 3-channel image");
    detail::FilePtr f = detail::open_file(path, "wb");

    const std::size_t pixels = std::size_t(img.height) * img.width;
    std::vector<unsigned char> rgb(pixels * 3);
    for (std::size_t i = 0; i < pixels; ++i)
        for (int c = 0; c < 3; ++c) {
            const int byte = int(img.data[std::size_t(c) * pixels + i] * 255.0f + 0.5f);
            rgb[3 * i + c] = (unsigned char)std::clamp(byte, 0, 255);
        }

    jpeg_compress_struct cinfo;
    detail::JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = detail::jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        throw IoError("jpeg: write failed: " + path);
    }

    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, f.get());
    cinfo.image_width = JDIMENSION(img.width);
    cinfo.image_height = JDIMENSION(img.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        unsigned char* row = rgb.data() + std::size_t(cinfo.next_scanline) * img.width * 3;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

inline void save_png(const ImageTensor& img, const std::string& path) {
    if (img.channels != 3) throw ModeMismatch("save_png: expects a 3-channel image");
    detail::FilePtr f = detail::open_file(path, "wb");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: allocation failed");
    }

    const std::size_t pixels = std::size_t(img.height) * img.width;
    std::vector<unsigned char> rgb(pixels * 3);
    for (std::size_t i = 0; i < pixels; ++i) {
        for (int c = 0; c < 3; ++c) {
            float v = img.data[std::size_t(c) * pixels + i];
            int byte = int(v * 255.0f + 0.5f);
            rgb[3 * i + c] = (unsigned char)std::clamp(byte, 0, 255);
        }
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: write failed: " + path);
    }

    png_init_io(png, f.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = rgb.data() + std::size_t(y) * img.width * 3;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace pardinus
