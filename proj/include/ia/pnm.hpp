#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ia/bytes.hpp"
#include "ia/grid.hpp"

namespace ia {

struct PnmHeader {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 for P5, 3 for P6
    int maxval = 0;    // 255 or 65535
};

namespace detail {

inline std::runtime_error pnm_error(const std::string& path, size_t offset, const std::string& what) {
    return std::runtime_error("pnm: " + path + ": byte " + std::to_string(offset) + ": " + what);
}

// PNM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
inline std::string next_token(const std::vector<uint8_t>& buf, size_t& pos,
                              const std::string& path) {
    while (pos < buf.size()) {
        uint8_t c = buf[pos];
        if (c == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= buf.size()) throw pnm_error(path, pos, "unexpected end of header");
    size_t start = pos;
    while (pos < buf.size() && buf[pos] > ' ') ++pos;
    return std::string(buf.begin() + start, buf.begin() + pos);
}

inline int parse_header_int(const std::vector<uint8_t>& buf, size_t& pos,
                            const std::string& path, const char* field) {
    size_t at = pos;
    std::string tok = next_token(buf, pos, path);
    for (char c : tok)
        if (c < '0' || c > '9')
            throw pnm_error(path, at, std::string("invalid ") + field + " '" + tok + "'");
    if (tok.size() > 9) throw pnm_error(path, at, std::string(field) + " out of range");
    return std::stoi(tok);
}

}  // namespace detail

/// Reads a binary PGM (P5) or PPM (P6) file. Values are scaled to [0,1] by
/// dividing by maxval. Only maxval 255 and 65535 are accepted; 16-bit samples
/// are big-endian per the PNM convention.
inline Grid read_pnm(const std::string& path, PnmHeader* header_out = nullptr) {
    std::vector<uint8_t> buf = detail::read_file_bytes(path);
    size_t pos = 0;

    std::string magic = detail::next_token(buf, pos, path);
    int channels = 0;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw detail::pnm_error(path, 0, "unsupported magic '" + magic + "' (expected P5 or P6)");

    int width = detail::parse_header_int(buf, pos, path, "width");
    int height = detail::parse_header_int(buf, pos, path, "height");
    size_t maxval_at = pos;
    int maxval = detail::parse_header_int(buf, pos, path, "maxval");
    if (maxval != 255 && maxval != 65535)
        throw detail::pnm_error(path, maxval_at, "unsupported maxval " + std::to_string(maxval));
    if (width < 1 || height < 1)
        throw detail::pnm_error(path, 0, "degenerate image size");

    // Exactly one whitespace byte separates the header from the payload.
    if (pos >= buf.size()) throw detail::pnm_error(path, pos, "missing payload");
    if (buf[pos] != '\n' && buf[pos] != ' ' && buf[pos] != '\t' && buf[pos] != '\r')
        throw detail::pnm_error(path, pos, "expected whitespace before payload");
    ++pos;

    int bytes_per_sample = (maxval == 255) ? 1 : 2;
    size_t samples = static_cast<size_t>(width) * height * channels;
    size_t need = samples * bytes_per_sample;
    if (buf.size() - pos < need)
        throw detail::pnm_error(path, buf.size(),
                                "truncated payload (need " + std::to_string(need) + " bytes, have " +
                                    std::to_string(buf.size() - pos) + ")");

    Grid grid(height, width, channels);
    float scale = 1.0f / static_cast<float>(maxval);
    float* dst = grid.data().data();
    if (bytes_per_sample == 1) {
        for (size_t i = 0; i < samples; ++i) dst[i] = buf[pos + i] * scale;
    } else {
        for (size_t i = 0; i < samples; ++i) {
            uint16_t v = static_cast<uint16_t>((buf[pos + 2 * i] << 8) | buf[pos + 2 * i + 1]);
            dst[i] = v * scale;
        }
    }
    if (header_out) *header_out = PnmHeader{width, height, channels, maxval};
    return grid;
}

/// Writes a binary PGM/PPM with the canonical header "P5\n<w> <h>\n<maxval>\n".
/// Values are clamped to [0,1] and quantized with round-half-up.
inline void write_pnm(const Grid& grid, const std::string& path, int maxval = 255) {
    if (grid.channels() != 1 && grid.channels() != 3)
        throw std::invalid_argument("write_pnm: channels must be 1 or 3, got " +
                                    std::to_string(grid.channels()));
    if (maxval != 255 && maxval != 65535)
        throw std::invalid_argument("write_pnm: maxval must be 255 or 65535");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);

    out << (grid.channels() == 1 ? "P5" : "P6") << "\n"
        << grid.width() << " " << grid.height() << "\n"
        << maxval << "\n";

    const float* src = grid.data().data();
    size_t samples = grid.data().size();
    std::vector<uint8_t> payload;
    if (maxval == 255) {
        payload.resize(samples);
        for (size_t i = 0; i < samples; ++i) {
            double v = std::min(1.0, std::max(0.0, static_cast<double>(src[i])));
            payload[i] = static_cast<uint8_t>(std::floor(v * 255.0 + 0.5));
        }
    } else {
        payload.resize(samples * 2);
        for (size_t i = 0; i < samples; ++i) {
            double v = std::min(1.0, std::max(0.0, static_cast<double>(src[i])));
            uint16_t q = static_cast<uint16_t>(std::floor(v * 65535.0 + 0.5));
            payload[2 * i] = static_cast<uint8_t>(q >> 8);
            payload[2 * i + 1] = static_cast<uint8_t>(q & 0xff);
        }
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ia
