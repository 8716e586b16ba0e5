#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "decu/image.hpp"

namespace decu {

// Shortest decimal that round-trips the exact double, so emitted CSVs double
// as regression fixtures.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void write_csv(const std::filesystem::path& path, std::span<const std::string> header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    write_file(path, out);
}

// Plain matrix CSV (one line per image row), used for pixel maps.
inline void write_matrix_csv(const std::filesystem::path& path, const Image& img) {
    std::string out;
    for (int y = 0; y < img.size; ++y) {
        for (int x = 0; x < img.size; ++x) {
            if (x > 0) out += ',';
            out += format_double(img.at(x, y));
        }
        out += '\n';
    }
    write_file(path, out);
}

// Binary 8-bit PGM. Values are scaled by value_max and clamped.
inline void write_pgm(const std::filesystem::path& path, const Image& img,
                      double value_max = 1.0) {
    std::string out = "P5\n" + std::to_string(img.size) + " " + std::to_string(img.size) +
                      "\n255\n";
    for (int y = 0; y < img.size; ++y)
        for (int x = 0; x < img.size; ++x) {
            const double v = value_max > 0.0 ? img.at(x, y) / value_max : 0.0;
            const int byte = std::clamp(static_cast<int>(v * 255.0 + 0.5), 0, 255);
            out.push_back(static_cast<char>(static_cast<unsigned char>(byte)));
        }
    write_file(path, out);
}

} // namespace decu
