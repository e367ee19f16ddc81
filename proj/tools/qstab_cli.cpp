// Command-line front end: forward, synth, reconstruct, diagnose, counterexample, sweep.
// Exit codes: 0 ok, 2 contract violation, 3 solver failure, 4 I/O.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qstab/config.hpp"
#include "qstab/counterexample.hpp"
#include "qstab/diagnostics.hpp"
#include "qstab/field_io.hpp"
#include "qstab/forward.hpp"
#include "qstab/reconstruction.hpp"
#include "qstab/report.hpp"
#include "qstab/sweep.hpp"
#include "qstab/synthesis.hpp"

namespace fs = std::filesystem;
using namespace qstab;

namespace {

enum Exit { kOk = 0, kContract = 2, kSolver = 3, kIo = 4 };

int run_forward(const std::string& q_path, const std::string& g_spec, const std::string& out, double tol,
                const std::string& f_out) {
    const auto q = read_field(q_path);
    SolverOptions opts;
    opts.tol = tol;
    const auto rep = solve_dirichlet(q, boundary_from_spec(q.grid(), g_spec), opts);
    json j;
    j["status"] = to_string(rep.status);
    j["degenerate"] = rep.degenerate;
    j["residual_linf"] = rep.residual_linf;
    j["iterations"] = rep.iterations;
    j["eigen_gap_estimate"] = real_or_null(rep.eigen_gap_estimate);
    j["used_direct"] = rep.used_direct;
    std::cout << j.dump(2) << "\n";
    if (rep.status != SolveStatus::ok) {
        std::cerr << "forward: solve " << to_string(rep.status) << "\n";
        return kSolver;
    }
    write_field(out, rep.u);
    if (!f_out.empty()) write_field(f_out, internal_data(q, rep.u));
    return kOk;
}

int run_synth(const std::string& config_path, const std::string& out) {
    const auto cfg = Config::load(config_path);
    const auto sc = SweepConfig::from_config(cfg);
    const Grid grid = sc.grid();
    const auto q1 = ScalarField::constant(grid, sc.base_q);
    const double amp = cfg.get_real("synth.amplitude", sc.amplitudes.front());
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("synth.seed", static_cast<long>(sc.seed_base)));
    const auto q2 = perturb_coefficient(q1, sc.mode, amp, seed, sc.bounds.k_bound);
    const auto pair = make_pair_jittered(q1, q2.q, boundary_from_spec(grid, sc.g_spec), sc.bounds, sc.jitter, seed,
                                         sc.solver);
    write_pair(pair, {seed, to_string(sc.mode), amp}, out);
    std::cout << fs::path(out) / "pair.json" << "\n";
    return kOk;
}

int run_reconstruct(const std::string& f_path, const std::string& g_spec, const std::string& out,
                    const std::string& config_path, std::optional<double> k_bound) {
    const auto f = read_field(f_path);
    SweepConfig sc;
    if (!config_path.empty()) sc = SweepConfig::from_config(Config::load(config_path));
    PriorBounds bounds = sc.bounds;
    if (k_bound) bounds = PriorBounds(*k_bound, std::max(bounds.e_bound, *k_bound), bounds.h_bound, bounds.d_margin);
    const auto rec = reconstruct(f, boundary_from_spec(f.grid(), g_spec), bounds, sc.recon);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create directory '" + out + "': " + ec.message());
    write_field(fs::path(out) / "u_hat.field", rec.u_hat);
    write_field(fs::path(out) / "q_hat.field", rec.q_hat);
    write_text_file(fs::path(out) / "reconstruction.json", reconstruction_json(rec).dump(2) + "\n");
    if (!rec.converged) {
        std::cerr << "reconstruct: fixed point did not converge in " << rec.iterations << " iterations\n";
        return kSolver;
    }
    return kOk;
}

int run_diagnose(const std::string& manifest, const std::string& out, const std::string& config_path) {
    DiagnosticsConfig dc;
    const auto loaded = read_pair(manifest);
    dc.d_list = {loaded.pair.bounds.d_margin};
    if (!config_path.empty()) dc = SweepConfig::from_config(Config::load(config_path)).diag;
    const auto rep = diagnose(loaded.pair.u1, dc, &loaded.pair);
    const fs::path dir = out.empty() ? fs::path(manifest).parent_path() : fs::path(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_text_file(dir / "diagnostics.csv", diagnostics_csv(rep));
    write_text_file(dir / "diagnostics.json", diagnostics_summary(rep, rep.proof_bound_margin()).dump(2) + "\n");
    return kOk;
}

int run_counterexample(double r, double rr, int m_max, const std::string& out) {
    const auto rows = pathology_table(r, rr, m_max, {1.0, 2.0, std::numeric_limits<double>::infinity()});
    write_text_file(out, pathology_csv(rows));
    if (rows.size() >= 2) {
        const auto fit = fit_quadratic_growth(rows);
        json j;
        j["growth_c"] = fit.c;
        j["growth_b"] = fit.b;
        std::cout << j.dump(2) << "\n";
    }
    return kOk;
}

int run_sweep_cmd(const std::string& config_path, const std::string& out) {
    const auto sc = SweepConfig::from_config(Config::load(config_path));
    const auto rep = run_sweep(sc);
    emit_report(rep, out);
    std::cout << fit_json(rep).dump(2) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability experiments for recovering q in Δu + qu = 0 from internal data q u^2"};
    app.require_subcommand(1);

    std::string q_path, g_spec, out, config_path, f_path, manifest, f_out, pair_dir = "pair";
    double tol = 1e-10;
    double r = 1.0, rr = 2.0;
    int m_max = 20;
    std::optional<double> k_bound;

    auto* fwd = app.add_subcommand("forward", "solve Δu + q u = 0 with u = g on the boundary");
    fwd->add_option("--q", q_path, "coefficient field file")->required();
    fwd->add_option("--g", g_spec, "boundary spec (const:c, affine:a,b,c, cosxcosy, sinx, sinxmhalf, file:path)")
        ->required();
    fwd->add_option("--out", out, "output field file")->required();
    fwd->add_option("--tol", tol, "relative residual tolerance");
    fwd->add_option("--f-out", f_out, "also write the internal data q u^2 to this field file");

    auto* syn = app.add_subcommand("synth", "synthesize one experiment pair");
    syn->add_option("--config", config_path, "config file")->required();
    syn->add_option("--out", pair_dir, "output directory (default: pair)");

    auto* rec = app.add_subcommand("reconstruct", "recover u and q from internal data and boundary values");
    rec->add_option("--f", f_path, "internal data field file")->required();
    rec->add_option("--g", g_spec, "boundary spec")->required();
    rec->add_option("--out", out, "output directory")->required();
    rec->add_option("--config", config_path, "config file for bounds.* and recon.* keys");
    rec->add_option("--k", k_bound, "coefficient bound K (overrides bounds.k)");

    auto* dia = app.add_subcommand("diagnose", "unique-continuation diagnostics for a pair");
    dia->add_option("--pair", manifest, "pair.json manifest")->required();
    dia->add_option("--out", out, "output directory (default: the manifest's directory)");
    dia->add_option("--config", config_path, "config file for diag.* keys");

    auto* ce = app.add_subcommand("counterexample", "tabulate the 1D oscillatory family");
    ce->add_option("--r", r, "inner radius")->required();
    ce->add_option("--R", rr, "outer radius")->required();
    ce->add_option("--mmax", m_max, "largest m")->required();
    ce->add_option("--out", out, "output CSV")->required();

    auto* swp = app.add_subcommand("sweep", "amplitude x seed sweep with Hölder fit");
    swp->add_option("--config", config_path, "config file")->required();
    swp->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kContract;
    }

    try {
        if (*fwd) return run_forward(q_path, g_spec, out, tol, f_out);
        if (*syn) return run_synth(config_path, pair_dir);
        if (*rec) return run_reconstruct(f_path, g_spec, out, config_path, k_bound);
        if (*dia) return run_diagnose(manifest, out, config_path);
        if (*ce) return run_counterexample(r, rr, m_max, out);
        if (*swp) return run_sweep_cmd(config_path, out);
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kContract;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kSolver;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const DegenerateBall& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kContract;
    }
    return kContract;
}
