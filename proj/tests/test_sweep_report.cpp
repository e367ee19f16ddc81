#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "qstab/report.hpp"
#include "qstab/sweep.hpp"

using namespace qstab;
namespace fs = std::filesystem;

namespace {

SweepConfig small_config() {
    SweepConfig c;
    c.nx = c.ny = 17;
    c.amplitudes = {1e-3, 1e-2, 1e-1};
    c.seeds = 2;
    c.d_list = {0.1, 0.2};
    c.diag.d_list = c.d_list;
    return c;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

std::size_t lines(const std::string& text) { return count_of(text, "\n"); }

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("qstab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

void check_golden(const std::string& name, const std::string& actual) {
    const fs::path path = fs::path(QSTAB_GOLDEN_DIR) / name;
    if (std::getenv("QSTAB_UPDATE_GOLDEN")) write_text_file(path, actual);
    ASSERT_TRUE(fs::exists(path)) << "missing golden file " << path;
    EXPECT_EQ(read_text_file(path), actual) << "golden mismatch: " << name;
}

}  // namespace

TEST(Sweep, SmallSweepIsUsableAndEnveloped) {
    const auto rep = run_sweep(small_config());
    ASSERT_EQ(rep.samples.size(), 6u);
    for (const auto& s : rep.samples) {
        EXPECT_TRUE(s.usable());
        EXPECT_GT(s.epsilon, 0.0);
        ASSERT_EQ(s.err_l1.size(), 2u);
        EXPECT_LE(s.err_l1[1], s.err_l1[0]);
        EXPECT_TRUE(s.recon_converged);
        EXPECT_LE(s.weighted.l3_lhs, s.weighted.lhs);
    }
    EXPECT_EQ(rep.fit.status, FitStatus::ok);
    EXPECT_TRUE(rep.envelope_ok);
    ASSERT_TRUE(rep.min_proof_margin.has_value());
    EXPECT_GT(*rep.min_proof_margin, 0.0);
    EXPECT_FALSE(rep.diagnostics.doubling.empty());
}

TEST(Sweep, ZeroAmplitudeGivesZeroSampleAndNoFit) {
    auto c = small_config();
    c.amplitudes = {0.0};
    c.seeds = 1;
    const auto rep = run_sweep(c);
    ASSERT_EQ(rep.samples.size(), 1u);
    EXPECT_EQ(rep.samples[0].epsilon, 0.0);
    EXPECT_EQ(rep.samples[0].err(), 0.0);
    EXPECT_EQ(rep.fit.status, FitStatus::no_fit);
    EXPECT_EQ(rep.fit.excluded_zero, 1u);
    EXPECT_NE(samples_csv(rep).find("zero_sample"), std::string::npos);
}

TEST(Sweep, TwoPointsGiveExactLine) {
    auto c = small_config();
    c.amplitudes = {1e-3, 1e-1};
    c.seeds = 1;
    const auto rep = run_sweep(c);
    EXPECT_EQ(rep.fit.status, FitStatus::underdetermined);
    for (const auto& s : rep.samples) EXPECT_NEAR(rep.fit.predict(s.epsilon), s.err(), 1e-10 * s.err());
}

TEST(Sweep, NegativeControlsLoseTheFit) {
    auto h = small_config();
    h.g_spec = "const:0.01";
    const auto rh = run_sweep(h);
    for (const auto& s : rh.samples) EXPECT_TRUE(s.hypotheses.h_violation);
    EXPECT_EQ(rh.fit.status, FitStatus::no_fit);

    auto k = small_config();
    k.base_q = 10.0;
    const auto rk = run_sweep(k);
    for (const auto& s : rk.samples) EXPECT_TRUE(s.hypotheses.k_violation);
    EXPECT_EQ(rk.fit.status, FitStatus::no_fit);
}

TEST(Sweep, RepeatedRunsAreIdentical) {
    const auto a = run_sweep(small_config()), b = run_sweep(small_config());
    EXPECT_EQ(samples_csv(a), samples_csv(b));
    EXPECT_EQ(fit_json(a).dump(), fit_json(b).dump());
    EXPECT_EQ(diagnostics_csv(a.diagnostics), diagnostics_csv(b.diagnostics));
    EXPECT_EQ(scatter_svg(a), scatter_svg(b));
}

TEST(Sweep, InvalidConfigurations) {
    auto c = small_config();
    c.amplitudes = {};
    EXPECT_THROW(run_sweep(c), ContractViolation);
    c = small_config();
    c.amplitudes = {-1e-3};
    EXPECT_THROW(run_sweep(c), ContractViolation);
    EXPECT_THROW(SweepConfig::from_config(Config::parse("sweep.amplitude = 1\n")), ContractViolation);
    EXPECT_THROW(SweepConfig::from_config(Config::parse("sweep.mode = spiral\n")), ContractViolation);
}

TEST(Sweep, ConfigEchoRoundTrips) {
    const auto c = SweepConfig::from_config(Config::parse("grid.nx = 33\nsweep.amplitudes = 0.1, 0.01\nrecon.tau = 1e-7\n"));
    const auto echo = c.echo();
    EXPECT_EQ(SweepConfig::from_config(Config::parse(echo)).echo(), echo);
}

TEST(Report, FilesAndShapes) {
    const auto rep = run_sweep(small_config());
    const auto dir = scratch_dir("report");
    emit_report(rep, dir);
    for (const char* f : {"samples.csv", "fit.json", "diagnostics.csv", "diagnostics.json", "plot.svg", "config.txt"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto csv = read_text_file(dir / "samples.csv");
    EXPECT_EQ(lines(csv), rep.samples.size() + 1);
    const auto svg = read_text_file(dir / "plot.svg");
    EXPECT_EQ(count_of(svg, "<circle"), rep.samples.size());
    EXPECT_EQ(count_of(svg, "<polyline"), 1u);
    const auto fit = json::parse(read_text_file(dir / "fit.json"));
    for (const char* key : {"c_hat", "eta_hat", "residual", "eta_ci", "envelope_ok"}) EXPECT_TRUE(fit.contains(key));
    const auto diag = json::parse(read_text_file(dir / "diagnostics.json"));
    for (const char* key : {"max_doubling", "min_propagation", "best_delta", "proof_bound_margin"})
        EXPECT_TRUE(diag.contains(key));
    EXPECT_EQ(read_text_file(dir / "diagnostics.csv").substr(0, 48),
              "functional,center_x,center_y,r,param,value,floor");
    fs::remove_all(dir);
}

TEST(Report, EmptySweepWritesHeadersOnly) {
    StabilityReport rep;
    const auto dir = scratch_dir("empty");
    emit_report(rep, dir);
    EXPECT_EQ(lines(read_text_file(dir / "samples.csv")), 1u);
    EXPECT_EQ(lines(read_text_file(dir / "diagnostics.csv")), 1u);
    const auto svg = read_text_file(dir / "plot.svg");
    EXPECT_EQ(count_of(svg, "<circle"), 0u);
    EXPECT_EQ(count_of(svg, "<polyline"), 0u);
    EXPECT_EQ(json::parse(read_text_file(dir / "fit.json"))["status"], "no_fit");
    fs::remove_all(dir);
}

TEST(Report, UnwritableDirectoryIsAnIoError) {
    const auto blocker = scratch_dir("blocker");
    write_text_file(blocker, "not a directory");
    EXPECT_THROW(emit_report(StabilityReport{}, blocker / "sub"), IoError);
    fs::remove(blocker);
}

TEST(Report, GoldenOutputs) {
    auto c = small_config();
    c.nx = c.ny = 9;
    c.seeds = 1;
    c.diag.radii = {0.1};
    c.diag.lattice = 2;
    const auto rep = run_sweep(c);
    check_golden("samples.csv", samples_csv(rep));
    check_golden("fit.json", fit_json(rep).dump(2) + "\n");
    check_golden("diagnostics.csv", diagnostics_csv(rep.diagnostics));
    check_golden("diagnostics.json", diagnostics_summary(rep.diagnostics, rep.min_proof_margin).dump(2) + "\n");
    check_golden("plot.svg", scatter_svg(rep));
    check_golden("pathology.csv", pathology_csv(pathology_table(1.0, 2.0, 5, {1.0})));
}

TEST(PairManifest, RoundTrip) {
    const Grid g(17, 17, 1, 1);
    const auto q1 = ScalarField::constant(g, 2.0);
    const auto q2 = perturb_coefficient(q1, PerturbMode::bump, 0.05, 3, 4.0).q;
    const auto pair = make_pair(q1, q2, boundary_from_spec(g, "cosxcosy"), PriorBounds(4, 2, 1, 0.1), {}, 3);
    const auto dir = scratch_dir("pair");
    write_pair(pair, {3, "bump", 0.05}, dir);
    const auto back = read_pair(dir / "pair.json");
    EXPECT_EQ(back.recorded_epsilon, pair.epsilon);
    EXPECT_EQ(back.pair.epsilon, pair.epsilon);
    EXPECT_EQ(sup_diff(back.pair.u2, pair.u2), 0.0);
    EXPECT_EQ(back.meta.mode, "bump");
    const auto j = json::parse(read_text_file(dir / "pair.json"));
    for (const char* key : {"seed", "mode", "amplitude", "epsilon", "bdry_gap", "k", "e", "h", "d", "flags"})
        EXPECT_TRUE(j.contains(key)) << key;
    fs::remove_all(dir);
}

TEST(PairManifest, MalformedManifest) {
    const auto dir = scratch_dir("badpair");
    fs::create_directories(dir);
    write_text_file(dir / "pair.json", "{\"seed\": 1}");
    EXPECT_THROW(read_pair(dir / "pair.json"), ContractViolation);
    write_text_file(dir / "pair.json", "{not json");
    EXPECT_THROW(read_pair(dir / "pair.json"), ContractViolation);
    EXPECT_THROW(read_pair(dir / "missing.json"), IoError);
    fs::remove_all(dir);
}

TEST(Report, ReconstructionAndPathologyFormats) {
    const Grid g(9, 9, 1, 1);
    const auto u = ScalarField::sample(g, [](double x, double y) { return std::cos(x) * std::cos(y); });
    const auto res = reconstruct(internal_data(ScalarField::constant(g, 2.0), u), boundary_trace(u), PriorBounds{});
    const auto j = reconstruction_json(res);
    for (const char* key : {"iterations", "final_update_linf", "floor_hits", "converged"}) EXPECT_TRUE(j.contains(key));
    const auto csv = pathology_csv(pathology_table(1.0, 2.0, 3, {1.0}));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "m,A_m,data_gap,coef_gap_p1,coef_gap_pinf,H_integral,K_required");
    EXPECT_EQ(lines(csv), 4u);
}
