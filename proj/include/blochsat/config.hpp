#pragma once

// Run configuration: a JSON document with the relaxation times in
// milliseconds, the control amplitude in Hz, and the numerical knobs.
// Command-line flags may override individual keys; the hash recorded in
// output headers is taken over the effective (post-override) values.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "blochsat/io.hpp"
#include "blochsat/params.hpp"

namespace blochsat {

struct RunConfig {
    double t1_ms = 0.0;
    double t2_ms = 0.0;
    double omega_max_hz = 0.0;
    double tol = 1e-10;
    int grid_n = 256;
    std::string output_dir = ".";
};

inline void validate(const RunConfig& c) {
    if (!(c.t1_ms > 0.0) || !(c.t2_ms > 0.0) || !(c.omega_max_hz > 0.0))
        throw invalid_params("config: t1_ms, t2_ms and omega_max_hz must be positive");
    if (c.t2_ms > 2.0 * c.t1_ms)
        throw invalid_params("config: unphysical relaxation times (t2 > 2*t1)");
    if (!(c.tol >= 1e-13 && c.tol <= 1e-3))
        throw invalid_params("config: tol must lie in [1e-13, 1e-3]");
    if (c.grid_n < 16 || c.grid_n > 4096)
        throw invalid_params("config: grid_n must lie in [16, 4096]");
}

inline PhysicalParams to_physical(const RunConfig& c) {
    return PhysicalParams{c.t1_ms * 1e-3, c.t2_ms * 1e-3, c.omega_max_hz};
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_params("config file not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_params(std::string("config parse error: ") + e.what());
    }
    RunConfig c;
    try {
        c.t1_ms = j.at("t1_ms").get<double>();
        c.t2_ms = j.at("t2_ms").get<double>();
        c.omega_max_hz = j.at("omega_max_hz").get<double>();
        if (j.contains("tol")) c.tol = j.at("tol").get<double>();
        if (j.contains("grid_n")) c.grid_n = j.at("grid_n").get<int>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw invalid_params(std::string("config field error: ") + e.what());
    }
    return c;
}

/// Canonical serialization of the effective config; input to the file hash.
inline std::string canonical_string(const RunConfig& c) {
    std::ostringstream os;
    os << "t1_ms=" << fmt_double(c.t1_ms) << ";t2_ms=" << fmt_double(c.t2_ms)
       << ";omega_max_hz=" << fmt_double(c.omega_max_hz) << ";tol=" << fmt_double(c.tol)
       << ";grid_n=" << c.grid_n << ";output_dir=" << c.output_dir;
    return os.str();
}

inline std::string config_hash(const RunConfig& c) {
    return hash_hex(fnv1a_hash(canonical_string(c)));
}

}  // namespace blochsat
