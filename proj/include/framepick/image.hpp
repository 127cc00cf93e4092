// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "framepick/core.hpp"

namespace framepick {

// 8-bit interleaved RGB image.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}

    [[nodiscard]] bool empty() const { return width <= 0 || height <= 0; }
    [[nodiscard]] std::size_t pixel_count() const { return std::size_t(width) * height; }
    std::uint8_t* px(int x, int y) { return &rgb[(std::size_t(y) * width + x) * 3]; }
    [[nodiscard]] const std::uint8_t* px(int x, int y) const { return &rgb[(std::size_t(y) * width + x) * 3]; }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        auto* p = px(x, y);
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }
};

// Loads PNG or binary PPM (P6) by content sniffing.
Image read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);
std::string encode_png(const Image& img);
void write_ppm(const std::filesystem::path& path, const Image& img);

// 8-bit binary PGM (P5) loaded as a grid rescaled to [0,1].
Grid read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Grid& grid);

[[nodiscard]] Image crop(const Image& img, const Rect& r);
// Box-filter downscale / nearest upscale to the target size.
[[nodiscard]] Image resize(const Image& img, int width, int height);
// Scale so the shortest edge equals `edge`; never upsamples.
[[nodiscard]] Image downscale_shortest_edge(const Image& img, int edge);

// Nearest-neighbour resample of a grid to a new size.
[[nodiscard]] Grid resample_nearest(const Grid& g, int width, int height);

}  // namespace framepick
