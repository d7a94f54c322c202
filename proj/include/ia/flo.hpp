#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ia/bytes.hpp"
#include "ia/grid.hpp"

namespace ia {

// Middlebury .flo container: little-endian float32 202021.25 ("PIEH"),
// int32 width, int32 height, then width*height interleaved (u,v) float32
// pairs in row-major order.
inline constexpr float kFloMagic = 202021.25f;

namespace detail {

inline void put_le32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

inline uint32_t get_le32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline float bits_to_float(uint32_t bits) {
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

inline uint32_t float_to_bits(float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    return bits;
}

}  // namespace detail

inline FlowField read_flo(const std::string& path) {
    std::vector<uint8_t> buf = detail::read_file_bytes(path);
    if (buf.size() < 12)
        throw std::runtime_error("flo: " + path + ": file too small for header");

    float magic = detail::bits_to_float(detail::get_le32(buf.data()));
    if (magic != kFloMagic)
        throw std::runtime_error("flo: " + path + ": bad magic (expected 202021.25)");

    int32_t width = static_cast<int32_t>(detail::get_le32(buf.data() + 4));
    int32_t height = static_cast<int32_t>(detail::get_le32(buf.data() + 8));
    if (width < 1 || height < 1)
        throw std::runtime_error("flo: " + path + ": invalid dimensions " +
                                 std::to_string(width) + "x" + std::to_string(height));

    size_t need = 12 + static_cast<size_t>(width) * height * 2 * 4;
    if (buf.size() != need)
        throw std::runtime_error("flo: " + path + ": size mismatch (header says " +
                                 std::to_string(need) + " bytes, file has " +
                                 std::to_string(buf.size()) + ")");

    FlowField flow(height, width);
    const uint8_t* p = buf.data() + 12;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            flow.u(y, x) = detail::bits_to_float(detail::get_le32(p));
            flow.v(y, x) = detail::bits_to_float(detail::get_le32(p + 4));
            p += 8;
        }
    }
    if (!flow.all_finite())
        throw std::runtime_error("flo: " + path + ": non-finite flow component");
    return flow;
}

inline void write_flo(const FlowField& flow, const std::string& path) {
    std::vector<uint8_t> buf;
    buf.reserve(12 + static_cast<size_t>(flow.height()) * flow.width() * 8);
    detail::put_le32(buf, detail::float_to_bits(kFloMagic));
    detail::put_le32(buf, static_cast<uint32_t>(flow.width()));
    detail::put_le32(buf, static_cast<uint32_t>(flow.height()));
    for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
            detail::put_le32(buf, detail::float_to_bits(flow.u(y, x)));
            detail::put_le32(buf, detail::float_to_bits(flow.v(y, x)));
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ia
