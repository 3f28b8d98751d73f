#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oblimit/limit_harness.hpp"
#include "oblimit/snapshot_io.hpp"

using namespace oblimit;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("oblimit_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

harness::StudyConfig tiny_study() {
    harness::StudyConfig c;
    c.grid = Grid{16, 16, 1.0};
    c.t_end = 0.1;
    return c;
}

ProblemSetup tiny_setup(double A = 0.1, double B = 0.01) { return tiny_study().setup_for(A, B); }

harness::RunResult tiny_run(SystemKind kind, double A = 0.1, double B = 0.01) {
    const ProblemSetup s = tiny_setup(A, B);
    return harness::run_case(s, kind, harness::perturbed_conduction(s, 0.1));
}

}  // namespace

TEST(Snapshot, RoundTripIsBitExact) {
    const ProblemSetup s = tiny_setup();
    Stepper st(s, SystemKind::full);
    FieldState f = harness::perturbed_conduction(s, 0.1);
    st.initialize_pressure(f, SystemKind::full);
    f = st.full_step(f);
    const fs::path dir = scratch_dir("snapshot");
    io::write_snapshot((dir / "a.bin").string(), f);
    const FieldState g = io::read_snapshot((dir / "a.bin").string());
    EXPECT_EQ(g.grid, f.grid);
    EXPECT_EQ(g.t, f.t);
    EXPECT_EQ((g.u - f.u).max_abs(), 0.0);
    EXPECT_EQ((g.w - f.w).max_abs(), 0.0);
    EXPECT_EQ((g.theta - f.theta).max_abs(), 0.0);
    EXPECT_EQ((g.p - f.p).max_abs(), 0.0);
    EXPECT_EQ((g.q - f.q).max_abs(), 0.0);

    FieldState plain = harness::perturbed_conduction(s, 0.1);
    io::write_snapshot((dir / "b.bin").string(), plain);
    EXPECT_FALSE(io::read_snapshot((dir / "b.bin").string()).has_full_state());
}

TEST(Snapshot, HeaderDescribesTheLayout) {
    const ProblemSetup s = tiny_setup();
    const FieldState f = harness::perturbed_conduction(s, 0.1);
    const fs::path path = scratch_dir("header") / "s.bin";
    io::write_snapshot(path.string(), f);
    const std::string bytes = io::read_text(path.string());
    std::uint64_t len = 0;
    std::memcpy(&len, bytes.data(), 8);
    const auto h = nlohmann::json::parse(bytes.substr(8, len));
    EXPECT_EQ(h["nx"], 16);
    EXPECT_EQ(h["ny"], 16);
    EXPECT_EQ(h["order"], "row-major");
    EXPECT_EQ(h["dtype"], "<f8");
    ASSERT_EQ(h["fields"].size(), 4u);
    EXPECT_EQ(h["fields"][1]["name"], "w");
    EXPECT_EQ(h["fields"][1]["rows"], 17);
    std::size_t payload = 0;
    for (const auto& fl : h["fields"]) payload += fl["rows"].get<std::size_t>() * fl["cols"].get<std::size_t>() * 8;
    EXPECT_EQ(bytes.size(), 8 + len + payload);
}

TEST(Snapshot, TruncatedFileIsAnError) {
    const FieldState f = harness::perturbed_conduction(tiny_setup(), 0.1);
    const fs::path path = scratch_dir("trunc") / "s.bin";
    io::write_snapshot(path.string(), f);
    fs::resize_file(path, fs::file_size(path) - 16);
    EXPECT_THROW(io::read_snapshot(path.string()), IoError);
    EXPECT_THROW(io::read_snapshot((path.parent_path() / "missing.bin").string()), IoError);
}

TEST(Snapshot, DiagnosticsCsv) {
    std::vector<Diagnostics> rows(2);
    rows[1].t = 0.1;
    rows[1].kinetic_energy = 1.0 / 3.0;
    const std::string csv = io::diagnostics_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,div_norm,kinetic_energy,theta_min,theta_max");
    EXPECT_NE(csv.find("\n0.10000000000000001,0,0.33333333333333331,0,0\n"), std::string::npos);
}

TEST(Harness, GitBlobHashMatchesGit) {
    // git hash-object of "hello\n" and of the empty file
    EXPECT_EQ(harness::git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    EXPECT_EQ(harness::git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Harness, RunCaseKeepsConductionSteady) {
    const ProblemSetup s = tiny_setup();
    const auto r = harness::run_case(s, SystemKind::ob, harness::perturbed_conduction(s, 0.0));
    ASSERT_EQ(r.snapshots.size(), std::size_t(r.steps + 1));
    for (const auto& f : r.snapshots) {
        EXPECT_LE(max_speed(f), 1e-12);
        EXPECT_LE((f.theta - r.snapshots.front().theta).max_abs(), 1e-12);
    }
    EXPECT_NEAR(r.snapshots.back().t, s.t_end, 1e-12);
    EXPECT_TRUE(std::isnan(r.wall_s));
}

TEST(Harness, RunCaseStrideAndFailure) {
    ProblemSetup s = tiny_setup();
    s.t_end = 10 * s.dt;
    const auto r = harness::run_case(s, SystemKind::ob, harness::perturbed_conduction(s, 0.1), 5);
    EXPECT_EQ(r.snapshots.size(), 3u);
    EXPECT_EQ(r.diagnostics.size(), 11u);
    EXPECT_DOUBLE_EQ(r.snapshot_dt, 5 * r.setup.dt);

    ProblemSetup bad = tiny_setup(0.1, 0.01);
    bad.groups.c0 = 1;
    bad.groups.theta_r = 10;
    try {
        harness::run_case(bad, SystemKind::full, harness::perturbed_conduction(bad, 0.1));
        FAIL() << "expected StepFailure";
    } catch (const StepFailure& e) {
        EXPECT_EQ(e.step(), 0u);
        EXPECT_EQ(e.kind(), "domain");
    }
}

TEST(Harness, SelfComparisonIsZero) {
    const auto a = tiny_run(SystemKind::ob);
    for (auto c : {harness::Component::velocity, harness::Component::theta, harness::Component::velocity_gradient})
        for (auto n : {harness::NormKind::space_time, harness::NormKind::final_time})
            EXPECT_LE(harness::difference_norm(a, a, c, n), 1e-12);

    harness::StudyConfig cfg = tiny_study();
    cfg.system = SystemKind::ob;
    const auto rep = harness::limit_study(cfg);
    ASSERT_EQ(rep.rows.size(), 4u);
    for (const auto& r : rep.rows) {
        EXPECT_LE(r.e_v, 1e-12);
        EXPECT_LE(r.e_theta, 1e-12);
        EXPECT_LE(r.p_gauge_std, 1e-12);
    }
}

TEST(Harness, DifferenceNormIsSymmetricAndSubadditive) {
    const auto a = tiny_run(SystemKind::ob);
    const auto b = tiny_run(SystemKind::full, 0.1, 0.01);
    const auto c = tiny_run(SystemKind::full, 0.05, 0.0025);
    for (auto comp : {harness::Component::velocity, harness::Component::theta, harness::Component::velocity_gradient}) {
        for (auto n : {harness::NormKind::space_time, harness::NormKind::final_time}) {
            const double ab = harness::difference_norm(a, b, comp, n), ba = harness::difference_norm(b, a, comp, n);
            const double ac = harness::difference_norm(a, c, comp, n), bc = harness::difference_norm(b, c, comp, n);
            EXPECT_EQ(ab, ba);
            EXPECT_GT(ab, 0.0);
            EXPECT_LE(ac, ab + bc + 1e-15);
            EXPECT_LE(ab, ac + bc + 1e-15);
        }
    }
}

TEST(Harness, MismatchedRunsAreRejected) {
    const auto a = tiny_run(SystemKind::ob);
    harness::StudyConfig cfg = tiny_study();
    cfg.grid = Grid{8, 16, 1.0};
    const ProblemSetup s = cfg.setup_for(0.1, 0.01);
    const auto b = harness::run_case(s, SystemKind::ob, harness::perturbed_conduction(s, 0.1));
    EXPECT_THROW(harness::difference_norm(a, b, harness::Component::theta, harness::NormKind::space_time),
                 ParameterError);
    EXPECT_THROW(harness::gauge_compare(b, a, 0.1), ParameterError);
}

TEST(Harness, GaugeCompare) {
    const auto ob = tiny_run(SystemKind::ob, 0.05);
    const auto ex = tiny_run(SystemKind::expansion, 0.05);
    const auto same = harness::gauge_compare(ex, ob, 0.05);
    EXPECT_LE(same.dv_inf, 1e-10);
    EXPECT_LE(same.dtheta_inf, 1e-10);
    EXPECT_LE(same.p_gauge_std, 1e-10);
    // wrong A in the gauge map only
    const auto off = harness::gauge_compare(ex, ob, 0.06);
    EXPECT_GT(off.p_gauge_std, 1e-6);
    // a different ob run
    ProblemSetup s = tiny_setup(0.05);
    s.groups.re_mu = 20;
    const auto other = harness::run_case(s, SystemKind::ob, harness::perturbed_conduction(s, 0.1));
    EXPECT_GT(harness::gauge_compare(ex, other, 0.05).dv_inf, 1e-6);
}

TEST(Harness, StudyConfigValidation) {
    harness::StudyConfig c = tiny_study();
    c.A_sequence = {0.1, 0.2};
    EXPECT_THROW(c.validate(), ParameterError);
    c.A_sequence = {0.1, -0.05};
    EXPECT_THROW(c.validate(), ParameterError);
    c = tiny_study();
    c.b_exponent = 1;
    EXPECT_THROW(c.validate(), ParameterError);
    c = tiny_study();
    c.b_coefficient = 20;
    EXPECT_THROW(c.validate(), ParameterError);
    c = tiny_study();
    c.A_sequence.clear();
    EXPECT_THROW(c.validate(), ParameterError);
    EXPECT_NO_THROW(tiny_study().validate());
}

TEST(Harness, SingleCaseStudyHasNoSlope) {
    harness::StudyConfig c = tiny_study();
    c.A_sequence = {0.1};
    const auto rep = harness::limit_study(c);
    ASSERT_EQ(rep.rows.size(), 1u);
    EXPECT_GT(rep.rows[0].e_v, 0.0);
    EXPECT_FALSE(rep.slope_v.has_value());
    EXPECT_FALSE(rep.slope_theta.has_value());
    const auto j = harness::report_json(rep, "");
    EXPECT_TRUE(j["slopes"]["e_v"].is_null());
}

TEST(Harness, FailedCaseKeepsEarlierRows) {
    harness::StudyConfig c = tiny_study();
    c.groups.c0 = 12;  // stable at small A only
    c.A_sequence = {0.05, 0.2};
    EXPECT_THROW(c.validate(), ParameterError);  // must decrease
    c.A_sequence = {0.2, 0.1, 0.025};
    const auto rep = harness::limit_study(c);
    EXPECT_FALSE(rep.error.empty());
    EXPECT_NE(rep.error.find("A=0.2"), std::string::npos);
    EXPECT_TRUE(rep.rows.empty());
    c.A_sequence = {0.025, 0.0125};
    c.groups.c0 = 1;
    const auto rep2 = harness::limit_study(c);
    EXPECT_FALSE(rep2.error.empty());
}

TEST(Harness, ReportFiles) {
    harness::ConvergenceReport empty;
    harness::finalize(empty);
    const fs::path d0 = scratch_dir("report_empty");
    harness::emit_report(empty, d0.string(), "");
    EXPECT_EQ(io::read_text((d0 / "limit_study.csv").string()), "A,B,e_v_L2,e_theta_L2,p_gauge_std,wall_s\n");

    harness::ConvergenceReport rep;
    for (double A : {0.2, 0.1, 0.05, 0.025}) {
        harness::ConvergenceRow r;
        r.A = A;
        r.B = A * A;
        r.e_v = 0.3 * A;
        r.e_theta = 0.2 * A * A;
        rep.rows.push_back(r);
    }
    harness::finalize(rep);
    const std::string config = "[limit_harness]\nA_sequence = 0.2, 0.1, 0.05, 0.025\n";
    const fs::path d1 = scratch_dir("report_four");
    harness::emit_report(rep, d1.string(), config);
    const std::string csv = io::read_text((d1 / "limit_study.csv").string());
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_NE(csv.find("\n0.025000000000000001,0.00062500000000000012,"), std::string::npos);
    EXPECT_NE(csv.find(",nan\n"), std::string::npos);
    const auto j = nlohmann::json::parse(io::read_text((d1 / "limit_study.json").string()));
    EXPECT_NEAR(j["slopes"]["e_v"]["slope"].get<double>(), 1.0, 1e-12);
    EXPECT_NEAR(j["slopes"]["e_theta"]["slope"].get<double>(), 2.0, 1e-12);
    EXPECT_LE(j["slopes"]["e_v"]["fit_residual"].get<double>(), 1e-12);
    EXPECT_TRUE(j["monotone"]["e_v"].get<bool>());
    EXPECT_EQ(j["config"], config);
    EXPECT_EQ(j["input_sha1"], harness::git_blob_sha1(config));
    EXPECT_TRUE(j["error"].is_null());

    const fs::path d2 = scratch_dir("report_four_again");
    harness::emit_report(rep, d2.string(), config);
    for (const char* name : {"limit_study.csv", "limit_study.json"})
        EXPECT_EQ(io::read_text((d1 / name).string()), io::read_text((d2 / name).string()));
}

TEST(Harness, StudyIsDeterministicAcrossThreadCounts) {
    harness::StudyConfig c = tiny_study();
    ::setenv("OBLIMIT_MAX_THREADS", "1", 1);
    const std::string serial = harness::report_csv(harness::limit_study(c));
    ::setenv("OBLIMIT_MAX_THREADS", "4", 1);
    const std::string threaded = harness::report_csv(harness::limit_study(c));
    ::unsetenv("OBLIMIT_MAX_THREADS");
    EXPECT_EQ(serial, threaded);
}

TEST(Harness, ParallelForVisitsEveryIndexOnce) {
    ::setenv("OBLIMIT_MAX_THREADS", "3", 1);
    EXPECT_EQ(harness::max_threads(), 3u);
    std::vector<std::atomic<int>> hits(50);
    harness::parallel_for(hits.size(), [&](std::size_t k) { ++hits[k]; });
    ::unsetenv("OBLIMIT_MAX_THREADS");
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(WeakResidual, ConductionSatisfiesTheWeakForms) {
    harness::StudyConfig c = tiny_study();
    const ProblemSetup s = c.setup_for(0.1, 0.01);
    const auto r = harness::run_case(s, SystemKind::ob, harness::perturbed_conduction(s, 0.0));
    const auto w = harness::weak_residual(r);
    EXPECT_LE(w.mass, 1e-12);
    EXPECT_LE(w.heat, 1e-12);
    EXPECT_LE(w.momentum, 1e-12);
}

TEST(WeakResidual, ObOutputIsSecondOrderConsistent) {
    std::vector<double> heat, mom;
    for (int n : {32, 64}) {
        harness::StudyConfig c;
        c.grid = Grid{n, n, 1.0};
        const ProblemSetup s = c.setup_for(0.1, 0.01);
        const auto r = harness::run_case(s, SystemKind::ob, harness::perturbed_conduction(s, 0.1));
        const auto w = harness::weak_residual(r);
        const double h = 1.0 / n;
        EXPECT_LE(w.heat, 10 * h * h);
        EXPECT_LE(w.momentum, 10 * h * h);
        EXPECT_LE(w.mass, 1e-12);
        heat.push_back(w.heat);
        mom.push_back(w.momentum);
    }
    EXPECT_GE(std::log2(heat[0] / heat[1]), 1.8);
    EXPECT_GE(std::log2(mom[0] / mom[1]), 1.8);
}

TEST(WeakResidual, NoiseFieldsAreFarFromSolutions) {
    auto r = tiny_run(SystemKind::ob);
    const double clean = harness::weak_residual(r).momentum;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0, 1);
    const Grid& g = r.setup.grid;
    for (auto& s : r.snapshots) {
        Field2D psi(g.nx, g.ny + 1);
        for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = 0.02 * normal(rng);
        for (int i = 0; i < g.nx; ++i) psi(i, 0) = psi(i, g.ny) = 0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) s.u(i, j) = (psi(i, j + 1) - psi(i, j)) / g.dy();
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) s.w(i, j) = -(psi(g.wrap(i + 1), j) - psi(i, j)) / g.dx();
        for (std::size_t k = 0; k < s.theta.size(); ++k) s.theta[k] += 0.1 * normal(rng);
    }
    const auto w = harness::weak_residual(r);
    std::printf("noise residuals: mass %.3e heat %.3e momentum %.3e\n", w.mass, w.heat, w.momentum);
    EXPECT_GT(w.momentum, 100 * clean);
}

TEST(WeakResidual, DictionaryFunctionsVanishOnTheBoundary) {
    for (int k = 0; k < 8; ++k) {
        for (double x : {0.0, 0.3, 0.8}) {
            for (double y : {0.0, 1.0}) {
                const Jet c = harness::dictionary_function(k, Jet::variable(x, 0), Jet::variable(y, 1),
                                                           Jet::variable(0.2, 2), 1.0, 0.5);
                EXPECT_NEAR(c.v, 0.0, 1e-15);
                EXPECT_NEAR(c.dx(), 0.0, 1e-15);
                EXPECT_NEAR(c.dy(), 0.0, 1e-15);
            }
            const Jet c0 = harness::dictionary_function(k, Jet::variable(x, 0), Jet::variable(0.4, 1),
                                                        Jet::variable(0.0, 2), 1.0, 0.5);
            EXPECT_NEAR(c0.v, 0.0, 1e-15);
        }
    }
    EXPECT_THROW(harness::dictionary_function(8, 0.0, 0.0, 0.0, 1.0, 1.0), ParameterError);
}
