#pragma once

// Little-endian binary stream helpers shared by the bag and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "stamp/errors.hpp"

namespace stamp::binio {

static_assert(std::endian::native == std::endian::little,
              "file formats are little endian; byte swapping is not implemented");

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_u8(std::ostream& os, std::uint8_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f32(std::ostream& os, const float* data, size_t count) {
    os.write(reinterpret_cast<const char*>(data),
             static_cast<std::streamsize>(count * sizeof(float)));
}

inline void write_bytes(std::ostream& os, const void* data, size_t count) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count));
}

inline std::uint32_t read_u32(std::istream& is, const std::string& field) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw FormatError("truncated file while reading " + field);
    return v;
}

inline std::uint8_t read_u8(std::istream& is, const std::string& field) {
    std::uint8_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw FormatError("truncated file while reading " + field);
    return v;
}

inline void read_f32(std::istream& is, float* out, size_t count, const std::string& field) {
    if (!is.read(reinterpret_cast<char*>(out),
                 static_cast<std::streamsize>(count * sizeof(float))))
        throw FormatError("truncated file while reading " + field);
}

inline void read_bytes(std::istream& is, void* out, size_t count, const std::string& field) {
    if (!is.read(reinterpret_cast<char*>(out), static_cast<std::streamsize>(count)))
        throw FormatError("truncated file while reading " + field);
}

} // namespace stamp::binio
