#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qstab/errors.hpp"
#include "qstab/field_io.hpp"
#include "qstab/grid.hpp"
#include "qstab/quadrature.hpp"

namespace qstab {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& text, const std::string& what) { return parse_number(trim(text), what); }

inline std::vector<double> parse_real_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_real(item, what));
    }
    return out;
}

/// Flat `key = value` configuration; `#` starts a comment. Keys are namespaced (solver.tol, ...).
class Config {
public:
    static Config parse(const std::string& text, const std::string& origin = "<config>") {
        Config c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ContractViolation(origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            if (key.empty() || key.find('.') == std::string::npos)
                throw ContractViolation(origin + ":" + std::to_string(lineno) + ": keys must be namespaced (a.b)");
            c.values_[key] = trim(line.substr(eq + 1));
        }
        return c;
    }

    static Config load(const std::filesystem::path& path) { return parse(read_text_file(path), path.string()); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    double get_real(const std::string& key, double fallback) const {
        return has(key) ? parse_real(values_.at(key), key) : fallback;
    }
    long get_int(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const double v = parse_real(values_.at(key), key);
        if (v != std::floor(v)) throw ContractViolation(key + ": expected an integer");
        return static_cast<long>(v);
    }
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const {
        return has(key) ? parse_real_list(values_.at(key), key) : fallback;
    }

    /// Reject keys outside `known`, so typos surface instead of silently using defaults.
    void check_known(const std::set<std::string>& known) const {
        for (const auto& [k, v] : values_)
            if (!known.count(k)) throw ContractViolation("unknown config key '" + k + "'");
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string dump() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

/// Boundary data from a short spec string:
///   const:<c>          g = c
///   affine:<a>,<b>,<c> g = a + b x + c y
///   cosxcosy           g = cos x cos y   (cos x on an interval)
///   sinx               g = sin x
///   sinxmhalf          g = sin(x - 1/2) cos y
///   file:<path>        trace of a field file on the same grid
inline BoundaryTrace boundary_from_spec(const Grid& g, const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto from_fn = [&](auto fn) { return boundary_trace(ScalarField::sample(g, fn)); };
    if (kind == "const") {
        const double c = parse_real(arg, "g spec const");
        return from_fn([c](double, double) { return c; });
    }
    if (kind == "affine") {
        const auto v = parse_real_list(arg, "g spec affine");
        require(v.size() == 3, "g spec affine needs three coefficients a,b,c");
        return from_fn([v](double x, double y) { return v[0] + v[1] * x + v[2] * y; });
    }
    if (kind == "cosxcosy") return from_fn([](double x, double y) { return std::cos(x) * std::cos(y); });
    if (kind == "sinx") return from_fn([](double x, double) { return std::sin(x); });
    if (kind == "sinxmhalf") return from_fn([](double x, double y) { return std::sin(x - 0.5) * std::cos(y); });
    if (kind == "file") {
        const auto f = read_field(arg);
        require(f.grid().nx() == g.nx() && f.grid().ny() == g.ny(), "g spec file: grid shape mismatch");
        auto t = boundary_trace(f);
        return t;
    }
    throw ContractViolation("unknown boundary spec '" + spec + "'");
}

} // namespace qstab
