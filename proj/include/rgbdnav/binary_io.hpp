#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <utility>

namespace rgbdnav {

// Little-endian encode/decode of arithmetic buffers.
template <typename T>
void append_le(std::string& out, std::span<const T> values) {
    static_assert(std::is_arithmetic_v<T>);
    const std::size_t offset = out.size();
    out.resize(offset + values.size_bytes());
    std::memcpy(out.data() + offset, values.data(), values.size_bytes());
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            char* p = out.data() + offset + i * sizeof(T);
            for (std::size_t a = 0, b = sizeof(T) - 1; a < b; ++a, --b) std::swap(p[a], p[b]);
        }
    }
}

template <typename T>
void read_le(const char* src, std::span<T> values) {
    static_assert(std::is_arithmetic_v<T>);
    std::memcpy(values.data(), src, values.size_bytes());
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto* bytes = reinterpret_cast<char*>(values.data());
        for (std::size_t i = 0; i < values.size(); ++i) {
            char* p = bytes + i * sizeof(T);
            for (std::size_t a = 0, b = sizeof(T) - 1; a < b; ++a, --b) std::swap(p[a], p[b]);
        }
    }
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace rgbdnav
