#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qstab/errors.hpp"
#include "qstab/grid.hpp"

namespace qstab {

/// Round-trip formatting shared by every text output: 17 significant digits.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Field text format:
///   FIELD v1 nx ny lx ly
///   <nx*ny values, row-major, one per line>
/// The grid origin is not stored; fields are read back with origin (0, 0).
inline std::string serialize_field(const ScalarField& f) {
    const Grid& g = f.grid();
    std::string out = "FIELD v1 " + std::to_string(g.nx()) + " " + std::to_string(g.ny()) + " " +
                      format_real(g.lx()) + " " + format_real(g.ly()) + "\n";
    out.reserve(out.size() + 25 * f.size());
    for (double v : f.values()) {
        out += format_real(v);
        out += '\n';
    }
    return out;
}

/// Whole-token strtod; subnormal results are accepted, overflow and trailing junk are not.
inline double parse_number(const std::string& token, const std::string& origin) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    const bool overflow = errno == ERANGE && std::isinf(v);
    if (token.empty() || end != token.c_str() + token.size() || overflow || !std::isfinite(v))
        throw ContractViolation(origin + ": bad value '" + token + "'");
    return v;
}

inline ScalarField parse_field(const std::string& text, const std::string& origin = "<memory>") {
    std::istringstream in(text);
    std::string magic, version;
    std::size_t nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    if (!(in >> magic >> version >> nx >> ny >> lx >> ly) || magic != "FIELD" || version != "v1")
        throw ContractViolation(origin + ": malformed FIELD header");
    std::vector<double> values;
    values.reserve(nx * ny);
    std::string token;
    while (in >> token) {
        values.push_back(parse_number(token, origin));
    }
    if (values.size() != nx * ny)
        throw ContractViolation(origin + ": expected " + std::to_string(nx * ny) + " values, found " +
                                std::to_string(values.size()));
    return ScalarField(Grid(nx, ny, lx, ly), std::move(values));
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_field(const std::filesystem::path& path, const ScalarField& f) {
    write_text_file(path, serialize_field(f));
}

inline ScalarField read_field(const std::filesystem::path& path) {
    return parse_field(read_text_file(path), path.string());
}

} // namespace qstab
