#pragma once
// png_io.hpp - 8-bit PNG image I/O (1 or 3 channels) plus the 16-bit
// grayscale export used for kernel previews, backed by libpng. GSD
// metadata travels in a JSON sidecar next to the image.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

#include <png.h>

#include <json.hpp>

#include "optigrade/common.hpp"
#include "optigrade/resample.hpp"

namespace optigrade::io {

namespace detail_png {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_error_to_exception(png_structp, png_const_charp msg) {
    throw IoError(std::string("libpng: ") + msg);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

}  // namespace detail_png

/// Reads an 8-bit PNG as a [0,1] float image. Palette, 16-bit, and alpha
/// variants are folded to plain 8-bit gray or RGB.
inline resample::Image read_png(const std::filesystem::path& path) {
    detail_png::FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw IoError("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             detail_png::png_error_to_exception,
                                             detail_png::png_warning_ignore);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed");
    }

    std::vector<png_bytep> rows;
    resample::Image img;
    try {
        png_init_io(png, file.get());
        png_read_info(png, info);

        png_set_strip_16(png);
        png_set_packing(png);
        png_set_expand(png);          // palette/low-depth to 8-bit
        png_set_strip_alpha(png);
        png_read_update_info(png, info);

        const int width = int(png_get_image_width(png, info));
        const int height = int(png_get_image_height(png, info));
        const int channels = png_get_channels(png, info);
        if (channels != 1 && channels != 3)
            throw IoError(path.string() + ": unsupported channel count after decode");

        std::vector<png_byte> buffer(size_t(width) * height * channels);
        rows.resize(height);
        for (int y = 0; y < height; ++y)
            rows[y] = buffer.data() + size_t(y) * width * channels;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);

        img = resample::Image::zeros(width, height, channels);
        for (int c = 0; c < channels; ++c) {
            double* plane = img.plane(c);
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x)
                    plane[size_t(y) * width + x] =
                        buffer[(size_t(y) * width + x) * channels + c] / 255.0;
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

/// Writes a [0,1] float image as 8-bit gray or RGB PNG.
inline void write_png(const std::filesystem::path& path, const resample::Image& img) {
    img.validate();
    detail_png::FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw IoError("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              detail_png::png_error_to_exception,
                                              detail_png::png_warning_ignore);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }

    try {
        png_init_io(png, file.get());
        png_set_IHDR(png, info, img.width, img.height, 8,
                     img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        std::vector<png_byte> row(size_t(img.width) * img.channels);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < img.channels; ++c) {
                    double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
                    row[size_t(x) * img.channels + c] = png_byte(std::lround(v * 255.0));
                }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

/// Writes a non-negative grid as 16-bit grayscale normalized to its peak.
inline void write_png16_normalized(const std::filesystem::path& path, const Grid<double>& grid) {
    if (grid.empty()) throw InvalidArgument("cannot export an empty grid");
    double peak = 0.0;
    for (double v : grid.data) peak = std::max(peak, v);
    if (!(peak > 0.0)) throw InvalidArgument("cannot normalize an all-zero grid");

    detail_png::FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw IoError("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              detail_png::png_error_to_exception,
                                              detail_png::png_warning_ignore);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }

    try {
        png_init_io(png, file.get());
        png_set_IHDR(png, info, grid.width, grid.height, 16, PNG_COLOR_TYPE_GRAY,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        std::vector<png_byte> row(size_t(grid.width) * 2);
        for (int y = 0; y < grid.height; ++y) {
            for (int x = 0; x < grid.width; ++x) {
                double v = std::clamp(grid.at(y, x) / peak, 0.0, 1.0);
                auto value = unsigned(std::lround(v * 65535.0));
                row[size_t(x) * 2] = png_byte(value >> 8);  // network byte order
                row[size_t(x) * 2 + 1] = png_byte(value & 0xff);
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------
// GSD sidecar: <image>.meta.json with {"gsd_m_per_px": value}
// ---------------------------------------------------------------------------

inline std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
    std::filesystem::path p = image_path;
    p += ".meta.json";
    return p;
}

inline void save_image(const std::filesystem::path& path, const resample::Image& img) {
    write_png(path, img);
    if (img.gsd) {
        nlohmann::json j;
        j["gsd_m_per_px"] = *img.gsd;
        std::ofstream out(sidecar_path(path));
        if (!out) throw IoError("cannot write " + sidecar_path(path).string());
        out << j.dump() << '\n';
    }
}

inline resample::Image load_image(const std::filesystem::path& path) {
    resample::Image img = read_png(path);
    auto meta = sidecar_path(path);
    if (std::filesystem::exists(meta)) {
        std::ifstream in(meta);
        nlohmann::json j;
        try {
            in >> j;
            img.gsd = j.at("gsd_m_per_px").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw IoError(meta.string() + ": " + e.what());
        }
    }
    return img;
}

}  // namespace optigrade::io
