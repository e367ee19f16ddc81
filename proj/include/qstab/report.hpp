#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "qstab/counterexample.hpp"
#include "qstab/diagnostics.hpp"
#include "qstab/field_io.hpp"
#include "qstab/reconstruction.hpp"
#include "qstab/sweep.hpp"
#include "qstab/synthesis.hpp"

namespace qstab {

using json = nlohmann::ordered_json;

inline json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline json real_or_null(const std::optional<double>& v) { return v ? real_or_null(*v) : json(nullptr); }

inline std::string join(const std::vector<std::string>& items, char sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

inline std::string csv_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

// ---------------------------------------------------------------- sweep report

inline std::string samples_csv(const StabilityReport& rep) {
    std::string out = "amplitude,seed,epsilon,bdry_gap";
    for (std::size_t k = 0; k < rep.config.d_list.size(); ++k) out += ",err_l1_d" + std::to_string(k);
    out += ",recon_err_l1,recon_iterations,recon_converged,hypothesis_ok,usable,weighted_lhs,proof_bound,l3_lhs,"
           "weightq_lhs,flags\n";
    for (const auto& s : rep.samples) {
        out += format_real(s.amplitude) + "," + std::to_string(s.seed) + "," + format_real(s.epsilon) + "," +
               format_real(s.bdry_gap);
        for (std::size_t k = 0; k < rep.config.d_list.size(); ++k)
            out += "," + (k < s.err_l1.size() ? format_real(s.err_l1[k]) : std::string());
        out += "," + csv_real(s.recon_err_l1) + "," + std::to_string(s.recon_iterations) + "," +
               (s.recon_converged ? "1" : "0") + "," + (s.hypothesis_ok ? "1" : "0") + "," + (s.usable() ? "1" : "0") +
               "," + format_real(s.weighted.lhs) + "," + format_real(s.weighted.proof_bound) + "," +
               format_real(s.weighted.l3_lhs) + "," + format_real(s.weighted.weightq_lhs) + "," + join(s.flags(), ';') +
               "\n";
    }
    return out;
}

/// Upper end of the accepted range for the fitted exponent.
inline constexpr double eta_upper_limit = 1.2;

inline json fit_json(const StabilityReport& rep) {
    const auto& f = rep.fit;
    json j;
    j["status"] = to_string(f.status);
    j["c_hat"] = real_or_null(f.has_line() ? f.c_hat : std::numeric_limits<double>::quiet_NaN());
    j["eta_hat"] = real_or_null(f.has_line() ? f.eta_hat : std::numeric_limits<double>::quiet_NaN());
    j["residual"] = real_or_null(f.has_line() ? f.residual : std::numeric_limits<double>::quiet_NaN());
    j["eta_stderr"] = real_or_null(f.eta_stderr);
    j["eta_ci"] = json::array({real_or_null(f.eta_ci_low), real_or_null(f.eta_ci_high)});
    j["used"] = f.used;
    j["excluded_zero"] = f.excluded_zero;
    j["samples"] = rep.samples.size();
    j["envelope_ok"] = rep.envelope_ok;
    j["eta_in_range"] = f.has_line() && f.eta_hat > 0.0 && f.eta_hat <= eta_upper_limit;
    j["min_proof_margin"] = real_or_null(rep.min_proof_margin);
    return j;
}

inline std::string diagnostics_csv(const DiagnosticsReport& d) {
    std::string out = "functional,center_x,center_y,r,param,value,floor_hits\n";
    auto ball = [&](const char* name, const BallRow& r, bool with_param) {
        out += std::string(name) + "," + format_real(r.center.x) + "," + format_real(r.center.y) + "," +
               format_real(r.r) + "," + (with_param ? format_real(r.param) : std::string()) + "," +
               format_real(r.value) + "," + std::to_string(r.floor_hits) + "\n";
    };
    for (const auto& r : d.doubling) ball("doubling", r, false);
    for (const auto& r : d.propagation) ball("propagation", r, false);
    for (const auto& r : d.ap) ball("muckenhoupt", r, true);
    // negative-power rows: r holds the margin d, param holds δ
    for (const auto& r : d.neg_integral)
        out += "negative_power,,," + format_real(r.d) + "," + format_real(r.delta) + "," + format_real(r.value) + "," +
               std::to_string(r.floor_hits) + "\n";
    if (d.weighted) {
        const auto& w = *d.weighted;
        out += "weighted_lhs,,,,," + format_real(w.lhs) + ",0\n";
        out += "proof_bound,,,,," + format_real(w.proof_bound) + ",0\n";
        out += "l3_lhs,,,,," + format_real(w.l3_lhs) + ",0\n";
        out += "weightq_lhs,,,,," + format_real(w.weightq_lhs) + ",0\n";
    }
    for (const auto& r : d.level_sets)
        out += "level_set,,," + format_real(r.d) + "," + format_real(r.t) + "," + format_real(r.l1_dt) + ",0\n";
    return out;
}

inline json diagnostics_summary(const DiagnosticsReport& d, std::optional<double> proof_margin) {
    json j;
    j["max_doubling"] = real_or_null(d.doubling.empty() ? std::optional<double>{} : d.max_doubling());
    j["min_propagation"] = real_or_null(d.propagation.empty() ? std::optional<double>{} : d.min_propagation());
    const auto best = d.best_delta();
    j["best_delta"] = real_or_null(best);
    j["eta_from_best_delta"] = real_or_null(best ? std::optional<double>(eta_from_delta(*best)) : std::nullopt);
    j["proof_bound_margin"] = real_or_null(proof_margin ? proof_margin : d.proof_bound_margin());
    j["degenerate_balls"] = d.degenerate_balls;
    return j;
}

/// Log-log scatter of (ε^{1/2}+ε, err): one circle per sample, one polyline for the fit.
/// Non-positive coordinates are pinned to the lower/left plot edge.
inline std::string scatter_svg(const StabilityReport& rep) {
    const double width = 640, height = 480, left = 70, right = 20, top = 20, bottom = 50;
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : rep.samples) pts.emplace_back(HolderFit::holder_variable(s.epsilon), s.err());

    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (auto [x, y] : pts) {
        if (x > 0.0) xlo = std::min(xlo, std::log10(x)), xhi = std::max(xhi, std::log10(x));
        if (y > 0.0) ylo = std::min(ylo, std::log10(y)), yhi = std::max(yhi, std::log10(y));
    }
    if (!std::isfinite(xlo)) xlo = -3.0, xhi = 0.0;
    if (!std::isfinite(ylo)) ylo = -3.0, yhi = 0.0;
    xlo = std::floor(xlo), xhi = std::max(std::ceil(xhi), xlo + 1.0);
    ylo = std::floor(ylo), yhi = std::max(std::ceil(yhi), ylo + 1.0);

    auto px = [&](double x) {
        const double lx = x > 0.0 ? std::log10(x) : xlo;
        return left + (lx - xlo) / (xhi - xlo) * (width - left - right);
    };
    auto py = [&](double y) {
        const double ly = y > 0.0 ? std::log10(y) : ylo;
        return height - bottom - (ly - ylo) / (yhi - ylo) * (height - top - bottom);
    };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    svg += "<g stroke=\"black\" fill=\"none\"><line x1=\"" + num(left) + "\" y1=\"" + num(height - bottom) +
           "\" x2=\"" + num(width - right) + "\" y2=\"" + num(height - bottom) + "\"/><line x1=\"" + num(left) +
           "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(height - bottom) + "\"/></g>\n";
    svg += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (double e = xlo; e <= xhi + 1e-9; e += 1.0)
        svg += "<text x=\"" + num(px(std::pow(10.0, e))) + "\" y=\"" + num(height - bottom + 18) +
               "\" text-anchor=\"middle\">1e" + std::to_string(static_cast<int>(e)) + "</text>\n";
    for (double e = ylo; e <= yhi + 1e-9; e += 1.0)
        svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(std::pow(10.0, e)) + 4) +
               "\" text-anchor=\"end\">1e" + std::to_string(static_cast<int>(e)) + "</text>\n";
    svg += "<text x=\"" + num(0.5 * (left + width - right)) + "\" y=\"" + num(height - 10) +
           "\" text-anchor=\"middle\">eps^(1/2) + eps</text>\n";
    svg += "<text x=\"16\" y=\"" + num(0.5 * (top + height - bottom)) + "\" transform=\"rotate(-90 16 " +
           num(0.5 * (top + height - bottom)) + ")\" text-anchor=\"middle\">L1 error on interior</text>\n";
    svg += "</g>\n";

    if (rep.fit.has_line()) {
        svg += "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
        const int steps = 48;
        for (int k = 0; k <= steps; ++k) {
            const double lx = xlo + (xhi - xlo) * k / steps;
            const double x = std::pow(10.0, lx);
            const double y = rep.fit.c_hat * std::pow(x, rep.fit.eta_hat);
            const double yy = std::clamp(py(y), top, height - bottom);
            svg += (k ? " " : "") + num(px(x)) + "," + num(yy);
        }
        svg += "\"/>\n";
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const bool usable = rep.samples[i].usable();
        svg += "<circle cx=\"" + num(px(pts[i].first)) + "\" cy=\"" + num(py(pts[i].second)) + "\" r=\"3.5\" fill=\"" +
               (usable ? "#2c3e50" : "none") + "\" stroke=\"#2c3e50\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

/// Write samples.csv, fit.json, diagnostics.csv, diagnostics.json, plot.svg and config.txt into dir.
inline void emit_report(const StabilityReport& rep, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    write_text_file(dir / "samples.csv", samples_csv(rep));
    write_text_file(dir / "fit.json", fit_json(rep).dump(2) + "\n");
    write_text_file(dir / "diagnostics.csv", diagnostics_csv(rep.diagnostics));
    write_text_file(dir / "diagnostics.json", diagnostics_summary(rep.diagnostics, rep.min_proof_margin).dump(2) + "\n");
    write_text_file(dir / "plot.svg", scatter_svg(rep));
    write_text_file(dir / "config.txt", rep.config.echo());
}

// ---------------------------------------------------------------- pair manifest

struct PairManifest {
    std::uint64_t seed = 0;
    std::string mode;
    double amplitude = 0.0;
};

inline void write_pair(const ExperimentPair& p, const PairManifest& meta, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    write_field(dir / "q1.field", p.q1);
    write_field(dir / "q2.field", p.q2);
    write_field(dir / "u1.field", p.u1);
    write_field(dir / "u2.field", p.u2);
    json j;
    j["seed"] = meta.seed;
    j["mode"] = meta.mode;
    j["amplitude"] = meta.amplitude;
    j["epsilon"] = p.epsilon;
    j["bdry_gap"] = p.bdry_gap;
    j["k"] = p.bounds.k_bound;
    j["e"] = p.bounds.e_bound;
    j["h"] = p.bounds.h_bound;
    j["d"] = p.bounds.d_margin;
    json flags = json::array();
    if (!p.hypothesis_ok) flags.push_back("bdry_hypothesis_failed");
    for (const auto& n : p.flags.names()) flags.push_back(n);
    j["flags"] = flags;
    j["hypothesis_ok"] = p.hypothesis_ok;
    j["files"] = {{"q1", "q1.field"}, {"q2", "q2.field"}, {"u1", "u1.field"}, {"u2", "u2.field"}};
    write_text_file(dir / "pair.json", j.dump(2) + "\n");
}

struct LoadedPair {
    ExperimentPair pair;
    PairManifest meta;
    double recorded_epsilon = 0.0;
};

inline LoadedPair read_pair(const std::filesystem::path& manifest) {
    json j;
    try {
        j = json::parse(read_text_file(manifest));
    } catch (const json::exception& e) {
        throw ContractViolation(manifest.string() + ": " + e.what());
    }
    try {
        const auto dir = manifest.parent_path();
        const auto& files = j.at("files");
        PriorBounds bounds(j.at("k").get<double>(), j.at("e").get<double>(), j.at("h").get<double>(),
                           j.at("d").get<double>());
        auto pair = pair_from_states(read_field(dir / files.at("q1").get<std::string>()),
                                     read_field(dir / files.at("q2").get<std::string>()),
                                     read_field(dir / files.at("u1").get<std::string>()),
                                     read_field(dir / files.at("u2").get<std::string>()), bounds,
                                     j.at("seed").get<std::uint64_t>());
        return {std::move(pair), {j.at("seed").get<std::uint64_t>(), j.at("mode").get<std::string>(),
                                  j.at("amplitude").get<double>()},
                j.at("epsilon").get<double>()};
    } catch (const json::exception& e) {
        throw ContractViolation(manifest.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- reconstruction / counterexample

inline json reconstruction_json(const ReconstructionResult& r) {
    json j;
    j["iterations"] = r.iterations;
    j["final_update_linf"] = r.final_update_linf;
    j["floor_hits"] = r.floor_hits;
    j["converged"] = r.converged;
    j["sign_change"] = r.sign_change;
    j["tau"] = r.tau;
    j["flagged_nodes"] = r.flagged.count();
    return j;
}

inline std::string pathology_csv(const std::vector<PathologyRow>& rows) {
    std::string out = "m,A_m,data_gap,coef_gap_p1,coef_gap_pinf,H_integral,K_required\n";
    for (const auto& r : rows)
        out += std::to_string(r.m) + "," + format_real(r.a_m) + "," + format_real(r.data_gap) + "," +
               format_real(r.coef_gap_p1) + "," + format_real(r.coef_gap_pinf) + "," + format_real(r.h_integral) +
               "," + format_real(r.k_required) + "\n";
    return out;
}

} // namespace qstab
