#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "garpp/errors.hpp"
#include "garpp/vec_ops.hpp"

namespace garpp {

// Gradient container file: 8-byte ASCII magic "GARBIN01", then n and d as
// unsigned 32-bit little-endian, then n*d IEEE-754 binary64 little-endian
// values, row-major (gradient i contiguous). Size is exactly 16 + 8*n*d.
inline constexpr char kGradientFileMagic[8] = {'G', 'A', 'R', 'B', 'I', 'N', '0', '1'};

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64le(std::string& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline double get_f64le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void write_gradient_file(const std::string& path,
                                std::span<const GradientVector> gradients) {
    if (gradients.empty()) throw precondition_error("write_gradient_file: empty gradient list");
    const std::size_t d = gradients.front().size();
    if (d == 0) throw precondition_error("write_gradient_file: zero-dimensional gradients");
    for (const auto& g : gradients) {
        check_same_dimension(gradients.front(), g, "write_gradient_file");
        ensure_finite(g, "write_gradient_file");
    }

    std::string buf;
    buf.reserve(16 + 8 * gradients.size() * d);
    buf.append(kGradientFileMagic, sizeof(kGradientFileMagic));
    detail::put_u32le(buf, static_cast<std::uint32_t>(gradients.size()));
    detail::put_u32le(buf, static_cast<std::uint32_t>(d));
    for (const auto& g : gradients) {
        for (double v : g) detail::put_f64le(buf, v);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("cannot open '" + path + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw format_error("short write to '" + path + "'");
}

inline std::vector<GradientVector> read_gradient_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open '" + path + "' for reading");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 16) {
        throw format_error("'" + path + "': truncated header, file is " +
                           std::to_string(bytes.size()) + " bytes but the header ends at byte offset 16");
    }
    if (std::memcmp(bytes.data(), kGradientFileMagic, sizeof(kGradientFileMagic)) != 0) {
        throw format_error("'" + path + "': bad magic at byte offset 0 (expected \"GARBIN01\")");
    }
    const std::uint32_t n = detail::get_u32le(bytes.data() + 8);
    const std::uint32_t d = detail::get_u32le(bytes.data() + 12);
    if (n == 0 || d == 0) {
        throw format_error("'" + path + "': n and d must be >= 1 (header at byte offsets 8 and 12)");
    }
    const std::uint64_t expected = 16 + 8ULL * n * d;
    if (bytes.size() != expected) {
        throw format_error("'" + path + "': file is " + std::to_string(bytes.size()) +
                           " bytes, expected exactly 16 + 8*n*d = " + std::to_string(expected) +
                           " (payload " + (bytes.size() < expected ? "truncated at" : "overruns") +
                           " byte offset " + std::to_string(bytes.size()) + ")");
    }

    std::vector<GradientVector> gradients(n, GradientVector(d));
    const unsigned char* p = bytes.data() + 16;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d; ++j) {
            const double v = detail::get_f64le(p);
            if (!std::isfinite(v)) {
                throw format_error("'" + path + "': non-finite value at byte offset " +
                                   std::to_string(p - bytes.data()) + " (gradient " +
                                   std::to_string(i) + ", coordinate " + std::to_string(j) + ")");
            }
            gradients[i][j] = v;
            p += 8;
        }
    }
    return gradients;
}

}  // namespace garpp
