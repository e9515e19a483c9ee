#pragma once

// Deterministic text emission: every float is printed with %.17g so that
// identical inputs produce byte-identical files, lines end with LF, and
// each output file starts with a comment line carrying the tool version
// and the hash of the effective configuration.

#include <cstdint>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "blochsat/version.hpp"

namespace blochsat {

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline std::uint64_t fnv1a_hash(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

/// Comment line placed at the top of every output file.
inline std::string file_banner(const std::string& config_hash) {
    return "# blochsat " + std::string(kVersion) + " config_hash=" + config_hash + "\n";
}

/// Accumulates a whole file in memory, then writes it in one binary pass.
class TextFile {
public:
    explicit TextFile(std::string path) : path_(std::move(path)) {}

    TextFile& raw(std::string_view s) {
        body_.append(s);
        return *this;
    }
    TextFile& line(std::string_view s) {
        body_.append(s);
        body_.push_back('\n');
        return *this;
    }

    void write() const {
        std::ofstream out(path_, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file: " + path_);
        out.write(body_.data(), static_cast<std::streamsize>(body_.size()));
        if (!out) throw std::runtime_error("failed writing output file: " + path_);
    }

    const std::string& body() const { return body_; }

private:
    std::string path_;
    std::string body_;
};

}  // namespace blochsat
