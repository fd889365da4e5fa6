#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

#include "stylerep/errors.hpp"

namespace stylerep {

// Little-endian byte packing shared by the NSW1/NSF1/forest file formats.

inline void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

/// Bounds-checked parse cursor over an in-memory byte string.
struct ByteCursor {
    const std::string& bytes;
    std::size_t pos = 0;
    std::string where; // file path or stream label for error messages

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw DataError(str("'", where, "': truncated at byte ", pos));
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i)
            v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes[pos++])) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos++])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string string(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
    bool done() const { return pos == bytes.size(); }
};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(str("cannot open '", path, "'"));
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(str("cannot open '", path, "' for writing"));
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw DataError(str("short write to '", path, "'"));
}

} // namespace stylerep
