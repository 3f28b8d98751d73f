#pragma once

// Subcommands behind the command-line tool. Each reads a validated
// RunConfig and writes its artifacts into one output directory.

#include <filesystem>
#include <iostream>
#include <string>

#include <json.hpp>

#include "oblimit/config.hpp"
#include "oblimit/constitutive.hpp"
#include "oblimit/limit_harness.hpp"
#include "oblimit/nondim.hpp"
#include "oblimit/snapshot_io.hpp"
#include "oblimit/solver.hpp"

namespace oblimit::commands {

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
}

/// coeffs.csv: p, theta, rho, alpha, beta, cp, eta on a 5 x 5 grid.
inline void cmd_coeffs(const config::RunConfig& c, const std::string& dir) {
    const auto& k = c.constitutive;
    const constitutive::GibbsModel<double> m{k.rho0, k.a, k.b, k.c0};
    m.validate();
    if (!(m.b > 0)) throw ParameterError("coeffs: c_p and entropy need constitutive.b > 0");
    auto f = [&](double v) { return io::fmt(v, c.cli.digits); };
    std::string out = "p,theta,rho,alpha,beta,cp,eta\n";
    for (int i = 0; i < 5; ++i) {
        const double p = k.p_lo + (k.p_hi - k.p_lo) * i / 4.0;
        for (int j = 0; j < 5; ++j) {
            const constitutive::ThermoPoint<double> pt{p, k.theta_lo + (k.theta_hi - k.theta_lo) * j / 4.0};
            out += f(pt.p) + "," + f(pt.theta) + "," + f(constitutive::density(m, pt)) + "," +
                   f(constitutive::alpha(m, pt)) + "," + f(constitutive::beta(m, pt)) + "," +
                   f(constitutive::specific_heat_cp(m, pt)) + "," + f(constitutive::entropy(m, pt)) + "\n";
        }
    }
    ensure_dir(dir);
    io::write_text(dir + "/coeffs.csv", out);
}

inline nlohmann::json verify_json(const config::RunConfig& c) {
    const auto& n = c.nondim;
    const auto checks = nondim::verify_assumptions(n.A, n.B, n.rect, n.base, c.constitutive.rho0, c.constitutive.c0);
    nondim::RegimeThresholds th;
    th.example_threshold = n.example_threshold;
    return nondim::to_json(checks, nondim::check_regimes(n.A, n.B, n.base.theta_r, th));
}

/// verify.json: the assumption checks and regime flags at (A, B).
inline void cmd_verify(const config::RunConfig& c, const std::string& dir) {
    const nlohmann::json j = verify_json(c);
    ensure_dir(dir);
    io::write_text(dir + "/verify.json", j.dump(2) + "\n");
}

/// diagnostics.csv, snapshot.bin (final state) and summary.json.
inline void cmd_simulate(const config::RunConfig& c, const std::string& dir) {
    ProblemSetup setup = c.setup();
    const SystemKind kind = c.solver.system;
    const int steps = setup.t_end > 0 ? std::max(1, int(std::ceil(setup.t_end / setup.dt - 1e-9))) : 0;
    if (steps > 0) setup.dt = setup.t_end / steps;
    Stepper stepper(setup, kind);
    FieldState s = harness::perturbed_conduction(setup, c.solver.perturbation);
    try {
        stepper.initialize_pressure(s, kind);
    } catch (const Error& e) {
        throw StepFailure(0, e);
    }
    std::vector<Diagnostics> rows{diagnostics(s)};
    int max_iter = 0;
    for (int k = 1; k <= steps; ++k) {
        try {
            s = stepper.step(kind, s);
        } catch (const Error& e) {
            throw StepFailure(k, e);
        }
        max_iter = std::max(max_iter, stepper.last_report().pcg_iterations);
        if (k % c.solver.diagnostics_stride == 0 || k == steps) rows.push_back(diagnostics(s));
    }
    ensure_dir(dir);
    io::write_text(dir + "/diagnostics.csv", io::diagnostics_csv(rows, c.cli.digits));
    io::write_snapshot(dir + "/snapshot.bin", s);
    nlohmann::ordered_json j;
    j["system"] = to_string(kind);
    j["grid"] = {{"nx", setup.grid.nx}, {"ny", setup.grid.ny}, {"lx", setup.grid.lx}};
    j["dt"] = setup.dt;
    j["steps"] = steps;
    j["t_end"] = s.t;
    j["groups"] = nondim::to_json(setup.groups);
    const Diagnostics& d = rows.back();
    j["final"] = {{"div_norm", d.div_norm},
                  {"kinetic_energy", d.kinetic_energy},
                  {"theta_min", d.theta_min},
                  {"theta_max", d.theta_max},
                  {"p_mean", d.p_mean}};
    if (kind == SystemKind::full) j["max_pcg_iterations"] = max_iter;
    io::write_text(dir + "/summary.json", j.dump(2) + "\n");
}

/// limit_study.csv and limit_study.json. Rows computed before a failing
/// case are written before the failure is reported.
inline void cmd_limit_study(const config::RunConfig& c, const std::string& dir) {
    const harness::ConvergenceReport rep = harness::limit_study(c.study);
    harness::emit_report(rep, dir, c.text, c.cli.digits);
    if (!rep.error.empty()) throw Error("study", rep.error);
}

inline nlohmann::ordered_json error_json(const std::exception& e) {
    nlohmann::ordered_json j;
    j["status"] = "error";
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        j["kind"] = err->kind();
        if (const auto* ce = dynamic_cast<const ConfigError*>(err)) {
            if (ce->line()) j["line"] = ce->line();
            if (!ce->key().empty()) j["key"] = ce->key();
        }
        if (const auto* sf = dynamic_cast<const StepFailure*>(err)) j["step"] = sf->step();
        if (const auto* cv = dynamic_cast<const ConvergenceError*>(err)) j["iterations"] = cv->iterations();
    } else {
        j["kind"] = "internal";
    }
    j["message"] = e.what();
    return j;
}

/// Full pipeline for one invocation: read, parse, dispatch. Returns the
/// process exit status; failures go to stderr and <out>/error.json.
inline int run(const std::string& subcommand, const std::string& config_path, const std::string& out_override) {
    std::string dir = out_override.empty() ? config::CliSection{}.out : out_override;
    try {
        const config::RunConfig c = config::parse_config(io::read_text(config_path));
        if (out_override.empty()) dir = c.cli.out;
        if (subcommand == "coeffs") cmd_coeffs(c, dir);
        else if (subcommand == "verify") cmd_verify(c, dir);
        else if (subcommand == "simulate") cmd_simulate(c, dir);
        else if (subcommand == "limit-study") cmd_limit_study(c, dir);
        else throw ParameterError("unknown subcommand '" + subcommand + "'");
        return 0;
    } catch (const std::exception& e) {
        const std::string text = error_json(e).dump() + "\n";
        std::cerr << text;
        try {
            ensure_dir(dir);
            io::write_text(dir + "/error.json", text);
        } catch (const std::exception&) {
        }
        return 1;
    }
}

}  // namespace oblimit::commands
