#pragma once

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "image.hpp"

namespace s2s::img {

// Malformed or unsupported image file content (as opposed to filesystem
// failures, which stay std::runtime_error).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// round-half-away-from-zero quantization to one byte
inline std::uint8_t quantize_u8(double p) {
    long v = std::lround(p * 255.0);
    return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

inline int pgm_next_token(std::FILE* f) {
    int c = std::fgetc(f);
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = std::fgetc(f);
        } else if (std::isspace(c)) {
            c = std::fgetc(f);
        } else {
            break;
        }
    }
    return c;
}

inline long pgm_read_int(std::FILE* f) {
    int c = pgm_next_token(f);
    if (c == EOF || !std::isdigit(c)) throw IoError("malformed PGM header");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = std::fgetc(f);
    }
    return v;
}

inline Image load_pgm(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open " + path);
    int m0 = std::fgetc(f.get()), m1 = std::fgetc(f.get());
    if (m0 != 'P' || m1 != '5') throw IoError("unsupported color format");
    long w = pgm_read_int(f.get());
    long h = pgm_read_int(f.get());
    long maxval = pgm_read_int(f.get());
    if (maxval != 255) throw IoError("unsupported bit depth");
    if (w < 1 || h < 1) throw IoError("malformed PGM header");
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h);
    if (std::fread(raw.data(), 1, raw.size(), f.get()) != raw.size())
        throw IoError("truncated PGM data in " + path);
    std::vector<double> px(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) px[i] = raw[i] / 255.0;
    return Image(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

inline void save_pgm(const Image& im, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("cannot write " + path);
    std::string header = "P5\n" + std::to_string(im.width()) + " " + std::to_string(im.height()) + "\n255\n";
    if (std::fwrite(header.data(), 1, header.size(), f.get()) != header.size())
        throw std::runtime_error("write failed: " + path);
    std::vector<std::uint8_t> raw(im.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize_u8(im[i]);
    if (std::fwrite(raw.data(), 1, raw.size(), f.get()) != raw.size())
        throw std::runtime_error("write failed: " + path);
}

inline Image load_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open " + path);
    png_byte sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw IoError("not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<std::uint8_t> raw;
    png_uint_32 w = 0, h = 0;
    int bit_depth = 0, color_type = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("corrupt PNG: " + path);
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    if (color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported color format");
    }
    if (bit_depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported bit depth");
    }
    raw.resize(static_cast<std::size_t>(w) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    std::vector<double> px(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) px[i] = raw[i] / 255.0;
    return Image(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

inline void save_png(const Image& im, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG write failed: " + path);
    }
    png_init_io(png, f.get());
    // pinned filter and level so identical pixels give identical bytes
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(im.width()), static_cast<png_uint_32>(im.height()),
                 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> raw(im.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize_u8(im[i]);
    std::vector<png_bytep> rows(im.height());
    for (int y = 0; y < im.height(); ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * im.width();
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline Image load_image(const std::string& path) {
    if (detail::ends_with(path, ".pgm") || detail::ends_with(path, ".pnm")) return detail::load_pgm(path);
    if (detail::ends_with(path, ".png")) return detail::load_png(path);
    // sniff by magic
    detail::FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("cannot open " + path);
    int c0 = std::fgetc(f.get());
    f.reset();
    if (c0 == 'P') return detail::load_pgm(path);
    return detail::load_png(path);
}

inline void save_image(const Image& im, const std::string& path) {
    if (detail::ends_with(path, ".pgm") || detail::ends_with(path, ".pnm"))
        detail::save_pgm(im, path);
    else
        detail::save_png(im, path);
}

}
