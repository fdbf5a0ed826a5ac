#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace spcv {

inline constexpr const char* kVersion = "0.1.0";

/// Raised on contract violations and I/O failures throughout the toolkit.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

/// Shortest round-trip decimal form of a double. Used for all CSV/JSON
/// emission so reruns are byte-identical.
inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// 64-bit FNV-1a, used for config hashing in run manifests.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace spcv
