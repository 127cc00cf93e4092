// SPDX-License-Identifier: Apache-2.0
#include "framepick/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace framepick {

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Parses a binary netpbm header ("P5"/"P6", width, height, maxval) and returns
// the payload offset.
std::size_t parse_netpbm_header(const std::string& data, const char* magic, int& w, int& h, int& maxval,
                                const std::filesystem::path& path) {
    if (data.size() < 2 || data.compare(0, 2, magic) != 0)
        throw FormatError(path.string() + ": not a " + magic + " file");
    std::size_t pos = 2;
    int fields[3] = {0, 0, 0};
    for (int f = 0; f < 3; ++f) {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= data.size() || !std::isdigit(static_cast<unsigned char>(data[pos])))
            throw FormatError(path.string() + ": malformed header");
        long v = 0;
        while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
            v = v * 10 + (data[pos] - '0');
            if (v > (1 << 20)) throw FormatError(path.string() + ": header value out of range");
            ++pos;
        }
        fields[f] = int(v);
    }
    if (pos >= data.size()) throw LengthError(path.string() + ": missing payload");
    ++pos;  // single whitespace byte before raster
    w = fields[0];
    h = fields[1];
    maxval = fields[2];
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw FormatError(path.string() + ": unsupported dimensions or maxval");
    return pos;
}

Image decode_png(const std::string& data, const std::filesystem::path& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, data.data(), data.size()))
        throw FormatError(path.string() + ": " + png.message);
    png.format = PNG_FORMAT_RGB;
    Image img(int(png.width), int(png.height));
    if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
        png_image_free(&png);
        throw FormatError(path.string() + ": " + png.message);
    }
    return img;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
    const std::string data = slurp(path);
    if (data.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(data.data()), 0, 8) == 0)
        return decode_png(data, path);
    int w = 0, h = 0, maxval = 0;
    const std::size_t off = parse_netpbm_header(data, "P6", w, h, maxval, path);
    Image img(w, h);
    if (data.size() - off < img.rgb.size()) throw LengthError(path.string() + ": truncated raster");
    std::memcpy(img.rgb.data(), data.data() + off, img.rgb.size());
    if (maxval != 255)
        for (auto& v : img.rgb) v = std::uint8_t(std::lround(v * 255.0 / maxval));
    return img;
}

std::string encode_png(const Image& img) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = png_uint_32(img.width);
    png.height = png_uint_32(img.height);
    png.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.rgb.data(), 0, nullptr))
        throw FormatError(std::string("png encode: ") + png.message);
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.rgb.data(), 0, nullptr))
        throw FormatError(std::string("png encode: ") + png.message);
    out.resize(size);
    return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
    const std::string bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write " + path.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write " + path.string());
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()), std::streamsize(img.rgb.size()));
}

Grid read_pgm(const std::filesystem::path& path) {
    const std::string data = slurp(path);
    int w = 0, h = 0, maxval = 0;
    const std::size_t off = parse_netpbm_header(data, "P5", w, h, maxval, path);
    if (data.size() - off < std::size_t(w) * h) throw LengthError(path.string() + ": truncated raster");
    Grid g(w, h);
    for (std::size_t i = 0; i < g.cells.size(); ++i)
        g.cells[i] = static_cast<unsigned char>(data[off + i]) / double(maxval);
    return g;
}

void write_pgm(const std::filesystem::path& path, const Grid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write " + path.string());
    out << "P5\n" << grid.width << ' ' << grid.height << "\n255\n";
    std::string raster(grid.cells.size(), '\0');
    for (std::size_t i = 0; i < grid.cells.size(); ++i)
        raster[i] = char(std::uint8_t(std::lround(std::clamp(grid.cells[i], 0.0, 1.0) * 255.0)));
    out.write(raster.data(), std::streamsize(raster.size()));
}

Image crop(const Image& img, const Rect& r) {
    const Rect c = clamp_to(r, img.width, img.height);
    if (c.empty()) throw DomainError("crop: empty region");
    Image out(c.w, c.h);
    for (int y = 0; y < c.h; ++y)
        std::memcpy(out.px(0, y), img.px(c.x, c.y + y), std::size_t(c.w) * 3);
    return out;
}

Image resize(const Image& img, int width, int height) {
    if (img.empty() || width <= 0 || height <= 0) throw DomainError("resize: empty image");
    if (width == img.width && height == img.height) return img;
    Image out(width, height);
    const double sx = double(img.width) / width;
    const double sy = double(img.height) / height;
    for (int y = 0; y < height; ++y) {
        const int y0 = int(y * sy);
        const int y1 = std::max(y0 + 1, std::min(img.height, int(std::ceil((y + 1) * sy))));
        for (int x = 0; x < width; ++x) {
            const int x0 = int(x * sx);
            const int x1 = std::max(x0 + 1, std::min(img.width, int(std::ceil((x + 1) * sx))));
            unsigned acc[3] = {0, 0, 0};
            for (int yy = y0; yy < y1; ++yy)
                for (int xx = x0; xx < x1; ++xx) {
                    const auto* p = img.px(xx, yy);
                    acc[0] += p[0];
                    acc[1] += p[1];
                    acc[2] += p[2];
                }
            const unsigned n = unsigned((y1 - y0) * (x1 - x0));
            out.set(x, y, std::uint8_t((acc[0] + n / 2) / n), std::uint8_t((acc[1] + n / 2) / n),
                    std::uint8_t((acc[2] + n / 2) / n));
        }
    }
    return out;
}

Image downscale_shortest_edge(const Image& img, int edge) {
    const int shortest = std::min(img.width, img.height);
    if (shortest <= edge) return img;
    const double s = double(edge) / shortest;
    return resize(img, std::max(1, int(std::lround(img.width * s))), std::max(1, int(std::lround(img.height * s))));
}

Grid resample_nearest(const Grid& g, int width, int height) {
    if (g.width == width && g.height == height) return g;
    Grid out(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(g.height - 1, int((std::int64_t(y) * g.height) / height));
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(g.width - 1, int((std::int64_t(x) * g.width) / width));
            out.at(x, y) = g.at(sx, sy);
        }
    }
    return out;
}

}  // namespace framepick
