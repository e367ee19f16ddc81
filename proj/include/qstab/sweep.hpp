#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qstab/config.hpp"
#include "qstab/diagnostics.hpp"
#include "qstab/forward.hpp"
#include "qstab/holder_fit.hpp"
#include "qstab/reconstruction.hpp"
#include "qstab/synthesis.hpp"

namespace qstab {

struct SweepConfig {
    std::size_t nx = 33, ny = 33;
    double lx = 1.0, ly = 1.0;
    double base_q = 2.0;
    PerturbMode mode = PerturbMode::bump;
    std::vector<double> amplitudes{1e-3, 1e-2, 1e-1};
    int seeds = 1;
    std::uint64_t seed_base = 1;
    PriorBounds bounds{4.0, 2.0, 1.0, 0.1};
    std::vector<double> d_list{0.1};
    std::string g_spec = "cosxcosy";
    double jitter = 0.0;
    SolverOptions solver;
    ReconOptions recon;
    bool reconstruct = true;
    DiagnosticsConfig diag;

    Grid grid() const { return Grid(nx, ny, lx, ly); }

    void validate() const {
        require(!amplitudes.empty(), "sweep: amplitude list must be nonempty");
        for (double a : amplitudes) require(a >= 0.0 && std::isfinite(a), "sweep: amplitudes must be >= 0");
        require(seeds >= 1, "sweep: seeds must be >= 1");
        require(!d_list.empty(), "sweep: d list must be nonempty");
        bounds.validate();
    }

    static const std::set<std::string>& known_keys() {
        static const std::set<std::string> keys{
            "grid.nx",        "grid.ny",         "grid.lx",       "grid.ly",        "base.q",
            "bounds.k",       "bounds.e",        "bounds.h",      "bounds.d",       "bdry.g",
            "bdry.jitter",    "sweep.mode",      "sweep.amplitudes", "sweep.seeds", "sweep.seed_base",
            "sweep.d_list",   "sweep.reconstruct", "synth.amplitude", "synth.seed", "solver.tol",
            "solver.max_iter", "solver.gap_threshold", "recon.tol", "recon.max_iter", "recon.tau",
            "diag.radii",     "diag.p",          "diag.delta",    "diag.t",         "diag.lattice"};
        return keys;
    }

    static SweepConfig from_config(const Config& c) {
        c.check_known(known_keys());
        SweepConfig s;
        s.nx = static_cast<std::size_t>(c.get_int("grid.nx", 33));
        s.ny = static_cast<std::size_t>(c.get_int("grid.ny", static_cast<long>(s.nx)));
        s.lx = c.get_real("grid.lx", 1.0);
        s.ly = c.get_real("grid.ly", s.ny == 1 ? 0.0 : s.lx);
        s.base_q = c.get_real("base.q", 2.0);
        s.bounds = PriorBounds(c.get_real("bounds.k", 4.0), c.get_real("bounds.e", 2.0), c.get_real("bounds.h", 1.0),
                               c.get_real("bounds.d", 0.1));
        s.g_spec = c.get("bdry.g", "cosxcosy");
        s.jitter = c.get_real("bdry.jitter", 0.0);
        s.mode = parse_perturb_mode(c.get("sweep.mode", "bump"));
        s.amplitudes = c.get_list("sweep.amplitudes", s.amplitudes);
        s.seeds = static_cast<int>(c.get_int("sweep.seeds", 1));
        s.seed_base = static_cast<std::uint64_t>(c.get_int("sweep.seed_base", 1));
        s.d_list = c.get_list("sweep.d_list", {s.bounds.d_margin});
        s.reconstruct = c.get_int("sweep.reconstruct", 1) != 0;
        s.solver.tol = c.get_real("solver.tol", s.solver.tol);
        s.solver.max_iter = static_cast<int>(c.get_int("solver.max_iter", s.solver.max_iter));
        s.solver.gap_factor = c.get_real("solver.gap_threshold", s.solver.gap_factor);
        s.recon.tol = c.get_real("recon.tol", s.recon.tol);
        s.recon.max_iter = static_cast<int>(c.get_int("recon.max_iter", s.recon.max_iter));
        if (c.has("recon.tau")) s.recon.tau = c.get_real("recon.tau", 0.0);
        s.diag.radii = c.get_list("diag.radii", s.diag.radii);
        s.diag.p_list = c.get_list("diag.p", s.diag.p_list);
        s.diag.delta_list = c.get_list("diag.delta", s.diag.delta_list);
        s.diag.t_list = c.get_list("diag.t", s.diag.t_list);
        s.diag.lattice = static_cast<std::size_t>(c.get_int("diag.lattice", 3));
        s.diag.d_list = s.d_list;
        s.validate();
        return s;
    }

    /// Canonical key-value echo written next to every report.
    std::string echo() const {
        Config c;
        auto list = [](const std::vector<double>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_real(v[i]);
            return s;
        };
        c.set("grid.nx", std::to_string(nx));
        c.set("grid.ny", std::to_string(ny));
        c.set("grid.lx", format_real(lx));
        c.set("grid.ly", format_real(ly));
        c.set("base.q", format_real(base_q));
        c.set("bounds.k", format_real(bounds.k_bound));
        c.set("bounds.e", format_real(bounds.e_bound));
        c.set("bounds.h", format_real(bounds.h_bound));
        c.set("bounds.d", format_real(bounds.d_margin));
        c.set("bdry.g", g_spec);
        c.set("bdry.jitter", format_real(jitter));
        c.set("sweep.mode", to_string(mode));
        c.set("sweep.amplitudes", list(amplitudes));
        c.set("sweep.seeds", std::to_string(seeds));
        c.set("sweep.seed_base", std::to_string(seed_base));
        c.set("sweep.d_list", list(d_list));
        c.set("sweep.reconstruct", reconstruct ? "1" : "0");
        c.set("solver.tol", format_real(solver.tol));
        c.set("solver.max_iter", std::to_string(solver.max_iter));
        c.set("solver.gap_threshold", format_real(solver.gap_factor));
        c.set("recon.tol", format_real(recon.tol));
        c.set("recon.max_iter", std::to_string(recon.max_iter));
        if (recon.tau) c.set("recon.tau", format_real(*recon.tau));
        c.set("diag.radii", list(diag.radii));
        c.set("diag.p", list(diag.p_list));
        c.set("diag.delta", list(diag.delta_list));
        c.set("diag.t", list(diag.t_list));
        c.set("diag.lattice", std::to_string(diag.lattice));
        return c.dump();
    }
};

struct SweepSample {
    double amplitude = 0.0;
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    double bdry_gap = 0.0;
    std::vector<double> err_l1;          // ||q1 - q2||_{L^1(Ω_d)} for each d in the sweep's d list
    std::optional<double> recon_err_l1;  // ||q̂2 - q2||_{L^1(Ω_d)} at the first d
    int recon_iterations = 0;
    bool recon_converged = false;
    bool sign_change = false;
    bool solve_failed = false;
    bool clip_saturated = false;
    bool hypothesis_ok = false;
    HypothesisFlags hypotheses;
    WeightedChecks weighted;
    std::vector<double> level_set_t;
    std::vector<double> level_set_l1;

    double err() const { return err_l1.empty() ? 0.0 : err_l1.front(); }
    bool usable() const { return !solve_failed && hypothesis_ok && !hypotheses.any(); }

    std::vector<std::string> flags() const {
        std::vector<std::string> out;
        if (solve_failed) out.emplace_back("solve_failed");
        if (!solve_failed && !hypothesis_ok) out.emplace_back("bdry_hypothesis_failed");
        for (auto& n : hypotheses.names()) out.push_back(n);
        if (clip_saturated) out.emplace_back("clip_saturated");
        if (recon_err_l1 && !recon_converged) out.emplace_back("recon_not_converged");
        if (sign_change) out.emplace_back("sign_change");
        if (!solve_failed && (epsilon == 0.0 || err() == 0.0)) out.emplace_back("zero_sample");
        return out;
    }
};

struct StabilityReport {
    SweepConfig config;
    std::vector<SweepSample> samples;
    HolderFit fit;
    DiagnosticsReport diagnostics;
    std::optional<double> min_proof_margin;
    bool envelope_ok = true;      // every usable sample lies below the fitted curve times exp(3·residual)

    std::vector<StabilitySample> fit_inputs() const {
        std::vector<StabilitySample> v;
        for (const auto& s : samples)
            if (s.usable()) v.push_back({s.epsilon, s.err()});
        return v;
    }
};

inline bool envelope_holds(const HolderFit& fit, const std::vector<StabilitySample>& samples, double sigmas = 3.0) {
    if (!fit.has_line()) return true;
    for (const auto& s : samples) {
        if (!(s.epsilon > 0.0) || !(s.error > 0.0)) continue;
        // relative tolerance absorbs rounding for points lying exactly on the fitted line
        if (s.error > fit.envelope(s.epsilon, sigmas) * (1.0 + 1e-12)) return false;
    }
    return true;
}

/// Run every (amplitude, seed) experiment, fit the Hölder law and collect diagnostics.
/// Deterministic given the configuration.
inline StabilityReport run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    StabilityReport rep;
    rep.config = cfg;
    const Grid grid = cfg.grid();
    const auto g = boundary_from_spec(grid, cfg.g_spec);
    const auto q1 = ScalarField::constant(grid, cfg.base_q);

    for (double amp : cfg.amplitudes) {
        for (int s = 0; s < cfg.seeds; ++s) {
            SweepSample smp;
            smp.amplitude = amp;
            smp.seed = cfg.seed_base + static_cast<std::uint64_t>(s);
            const auto q2 = perturb_coefficient(q1, cfg.mode, amp, smp.seed, cfg.bounds.k_bound);
            smp.clip_saturated = q2.saturated;
            try {
                const auto pair = make_pair_jittered(q1, q2.q, g, cfg.bounds, cfg.jitter, smp.seed, cfg.solver);
                smp.epsilon = pair.epsilon;
                smp.bdry_gap = pair.bdry_gap;
                smp.hypothesis_ok = pair.hypothesis_ok;
                smp.hypotheses = pair.flags;
                const auto dq = pair.q1 - pair.q2;
                for (double d : cfg.d_list) smp.err_l1.push_back(norms(dq, interior_mask(grid, d)).l1);
                smp.weighted = weighted_checks(pair);
                for (double t : cfg.diag.t_list) {
                    smp.level_set_t.push_back(t);
                    smp.level_set_l1.push_back(level_set_error(pair.q1, pair.q2, pair.u1, t).value);
                }
                if (cfg.reconstruct) {
                    const auto rec = reconstruct(pair.f2, boundary_trace(pair.u2), cfg.bounds, cfg.recon);
                    smp.recon_err_l1 = reconstruction_error(rec.q_hat, pair.q2, cfg.d_list.front()).l1_interior;
                    smp.recon_iterations = rec.iterations;
                    smp.recon_converged = rec.converged;
                    smp.sign_change = rec.sign_change;
                }
            } catch (const SolverFailure&) {
                smp.solve_failed = true;
            }
            rep.samples.push_back(std::move(smp));
        }
    }

    const auto inputs = rep.fit_inputs();
    rep.fit = fit_holder(inputs);
    rep.envelope_ok = envelope_holds(rep.fit, inputs);

    for (const auto& s : rep.samples) {
        if (s.solve_failed) continue;
        const auto& w = s.weighted;
        double margin = 1.0;
        if (w.proof_bound > 0.0) margin = (w.proof_bound - w.lhs) / w.proof_bound;
        else if (w.lhs > 0.0) margin = -1.0;   // ε = 0 yet u1 != u2 in modulus
        rep.min_proof_margin = rep.min_proof_margin ? std::min(*rep.min_proof_margin, margin) : margin;
    }

    try {
        const auto base = solve_dirichlet(q1, g, cfg.solver);
        if (base.status == SolveStatus::ok && !base.degenerate) rep.diagnostics = diagnose(base.u, cfg.diag);
    } catch (const ContractViolation&) {
        // diagnostics need a nontrivial base state and balls that fit; leave them empty otherwise
    }
    return rep;
}

} // namespace qstab
