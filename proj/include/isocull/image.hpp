// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isocull/geom.hpp"

namespace isocull {

// Binary PPM (P6, 8-bit). Channel mapping is round(255 * clamp(v, 0, 1)),
// so equal float buffers produce byte-identical files.
inline void write_ppm(const std::string& path, int width, int height, std::span<const Vec3> rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_ppm: buffer size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
    out << "P6\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(rgb.size() * 3);
    for (const Vec3& c : rgb) {
        bytes.push_back(static_cast<unsigned char>(std::lround(255.0 * clamp(c.x, 0.0, 1.0))));
        bytes.push_back(static_cast<unsigned char>(std::lround(255.0 * clamp(c.y, 0.0, 1.0))));
        bytes.push_back(static_cast<unsigned char>(std::lround(255.0 * clamp(c.z, 0.0, 1.0))));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

// Flat float32 dump with an int32 width/height header; same byte layout as
// the grid dump but two-dimensional. Used for depth buffers.
inline void write_float_map(const std::string& path, int width, int height,
                            std::span<const double> values) {
    if (values.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_float_map: buffer size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_float_map: cannot open " + path);
    std::int32_t header[2] = {width, height};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<float> f(values.begin(), values.end());
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write_float_map: write failed for " + path);
}

}  // namespace isocull
