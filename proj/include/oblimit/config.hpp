#pragma once

// Run configuration: an INI document with one section per module
// ([constitutive], [nondim], [solver], [limit_harness], [cli]).
// Every key is optional; unknown keys are rejected.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oblimit/errors.hpp"
#include "oblimit/limit_harness.hpp"
#include "oblimit/nondim.hpp"
#include "oblimit/solver.hpp"

namespace oblimit::config {

struct ConstitutiveSection {
    double rho0{1};
    double a{0.1};
    double b{0.1};
    double c0{1};
    // cmd_coeffs table, 5 x 5 points
    double p_lo{0}, p_hi{2};
    double theta_lo{0.5}, theta_hi{1.5};
};

struct NondimSection {
    double A{0.01};
    double B{1e-4};
    bool ab_from_model{false};  ///< derive (A, B) from [constitutive] a, b
    nondim::ScaleBase<double> base{};
    double band_lo{1e-2}, band_hi{1e2};
    double example_threshold{1.0};
    nondim::GridRect rect{};
};

struct SolverSection {
    SystemKind system{SystemKind::ob};
    int nx{64}, ny{64};
    double lx{1};
    double dt{0};  ///< 0: auto
    double t_end{0.5};
    double gamma{1}, re_mu{10}, re_lambda{std::numeric_limits<double>::infinity()}, pr{1}, c0{40};
    AdvectionScheme advection{AdvectionScheme::central};
    double perturbation{0.1};
    int diagnostics_stride{1};
    double pcg_tol{1e-10};
    int pcg_max_iter{500};
};

struct CliSection {
    std::string out{"out"};
    int digits{17};
};

struct RunConfig {
    ConstitutiveSection constitutive;
    NondimSection nondim;
    SolverSection solver;
    harness::StudyConfig study;
    CliSection cli;
    std::string text;  ///< the document as given

    nondim::DimensionlessGroups groups() const {
        nondim::DimensionlessGroups g;
        g.A = nondim.A;
        g.B = nondim.B;
        g.gamma = solver.gamma;
        g.re_mu = solver.re_mu;
        g.re_lambda = solver.re_lambda;
        g.pr = solver.pr;
        g.c0 = solver.c0;
        g.theta_r = nondim.base.theta_r;
        const nondim::Band band{nondim.band_lo, nondim.band_hi};
        g.gamma_in_band = band.contains(g.gamma);
        g.re_mu_in_band = band.contains(g.re_mu);
        g.re_lambda_in_band = std::isinf(g.re_lambda) || band.contains(g.re_lambda);
        g.pr_in_band = band.contains(g.pr);
        return g;
    }

    ProblemSetup setup() const {
        ProblemSetup s;
        s.grid = Grid{solver.nx, solver.ny, solver.lx};
        s.groups = groups();
        s.dt = solver.dt > 0 ? solver.dt : auto_dt(s.grid, 1.0);
        s.t_end = solver.t_end;
        s.advection = solver.advection;
        s.pcg_tol = solver.pcg_tol;
        s.pcg_max_iter = solver.pcg_max_iter;
        return s;
    }
};

namespace detail {

inline double to_double(const std::string& key, const std::string& raw) {
    std::string v = raw;
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    double out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError("'" + key + "': expected a number, got '" + raw + "'", 0, key);
    return out;
}

inline int to_int(const std::string& key, const std::string& raw) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), out);
    if (ec != std::errc() || ptr != raw.data() + raw.size())
        throw ConfigError("'" + key + "': expected an integer, got '" + raw + "'", 0, key);
    return out;
}

inline bool to_bool(const std::string& key, const std::string& raw) {
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError("'" + key + "': expected true or false, got '" + raw + "'", 0, key);
}

inline std::vector<double> to_list(const std::string& key, const std::string& raw) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError("'" + key + "': empty list entry", 0, key);
        out.push_back(to_double(key, item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw ConfigError("'" + key + "': empty list", 0, key);
    return out;
}

inline void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("'" + key + "' out of range: " + what, 0, key);
}

}  // namespace detail

/// Parses and validates a configuration document. Syntax errors carry the
/// 1-based line, range errors the offending key ("section.key").
inline RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    using namespace detail;
    pt::ptree tree;
    {
        std::istringstream in(text);
        try {
            pt::read_ini(in, tree);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError("syntax error: " + e.message(), e.line());
        }
    }
    RunConfig c;
    c.text = text;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto num = [](double& t) -> Setter { return [&t](const std::string& k, const std::string& v) { t = to_double(k, v); }; };
    auto integer = [](int& t) -> Setter { return [&t](const std::string& k, const std::string& v) { t = to_int(k, v); }; };
    std::set<std::string> seen;
    std::map<std::string, Setter> keys{
        {"constitutive.rho0", num(c.constitutive.rho0)},
        {"constitutive.a", num(c.constitutive.a)},
        {"constitutive.b", num(c.constitutive.b)},
        {"constitutive.c0", num(c.constitutive.c0)},
        {"constitutive.p_lo", num(c.constitutive.p_lo)},
        {"constitutive.p_hi", num(c.constitutive.p_hi)},
        {"constitutive.theta_lo", num(c.constitutive.theta_lo)},
        {"constitutive.theta_hi", num(c.constitutive.theta_hi)},
        {"nondim.A", num(c.nondim.A)},
        {"nondim.B", num(c.nondim.B)},
        {"nondim.ab_from_model", [&](const std::string& k, const std::string& v) { c.nondim.ab_from_model = to_bool(k, v); }},
        {"nondim.theta_r", num(c.nondim.base.theta_r)},
        {"nondim.vartheta0", num(c.nondim.base.vartheta0)},
        {"nondim.pi0", num(c.nondim.base.pi0)},
        {"nondim.g", num(c.nondim.base.g)},
        {"nondim.mu", num(c.nondim.base.mu)},
        {"nondim.lambda", num(c.nondim.base.lambda)},
        {"nondim.kappa", num(c.nondim.base.kappa)},
        {"nondim.length_constant", num(c.nondim.base.length_constant)},
        {"nondim.band_lo", num(c.nondim.band_lo)},
        {"nondim.band_hi", num(c.nondim.band_hi)},
        {"nondim.example_threshold", num(c.nondim.example_threshold)},
        {"nondim.p_lo", num(c.nondim.rect.p_lo)},
        {"nondim.p_hi", num(c.nondim.rect.p_hi)},
        {"nondim.theta_lo", num(c.nondim.rect.theta_lo)},
        {"nondim.theta_hi", num(c.nondim.rect.theta_hi)},
        {"nondim.points", integer(c.nondim.rect.points)},
        {"solver.system", [&](const std::string& k, const std::string& v) {
             try {
                 c.solver.system = system_from_string(v);
             } catch (const Error&) {
                 throw ConfigError("'" + k + "': expected ob, expansion or full, got '" + v + "'", 0, k);
             }
         }},
        {"solver.nx", integer(c.solver.nx)},
        {"solver.ny", integer(c.solver.ny)},
        {"solver.lx", num(c.solver.lx)},
        {"solver.dt", [&](const std::string& k, const std::string& v) { c.solver.dt = v == "auto" ? 0.0 : to_double(k, v); }},
        {"solver.t_end", num(c.solver.t_end)},
        {"solver.gamma", num(c.solver.gamma)},
        {"solver.re_mu", num(c.solver.re_mu)},
        {"solver.re_lambda", num(c.solver.re_lambda)},
        {"solver.pr", num(c.solver.pr)},
        {"solver.c0", num(c.solver.c0)},
        {"solver.advection", [&](const std::string& k, const std::string& v) {
             if (v == "central") c.solver.advection = AdvectionScheme::central;
             else if (v == "upwind") c.solver.advection = AdvectionScheme::upwind;
             else throw ConfigError("'" + k + "': expected central or upwind, got '" + v + "'", 0, k);
         }},
        {"solver.perturbation", num(c.solver.perturbation)},
        {"solver.diagnostics_stride", integer(c.solver.diagnostics_stride)},
        {"solver.pcg_tol", num(c.solver.pcg_tol)},
        {"solver.pcg_max_iter", integer(c.solver.pcg_max_iter)},
        {"limit_harness.A_sequence", [&](const std::string& k, const std::string& v) { c.study.A_sequence = to_list(k, v); }},
        {"limit_harness.b_coefficient", num(c.study.b_coefficient)},
        {"limit_harness.b_exponent", num(c.study.b_exponent)},
        {"limit_harness.snapshot_stride", integer(c.study.snapshot_stride)},
        {"limit_harness.system", [&](const std::string& k, const std::string& v) {
             if (v == "full") c.study.system = SystemKind::full;
             else if (v == "expansion") c.study.system = SystemKind::expansion;
             else if (v == "ob") c.study.system = SystemKind::ob;
             else throw ConfigError("'" + k + "': expected full, expansion or ob, got '" + v + "'", 0, k);
         }},
        {"limit_harness.norm", [&](const std::string& k, const std::string& v) {
             if (v == "space_time") c.study.norm = harness::NormKind::space_time;
             else if (v == "final_time") c.study.norm = harness::NormKind::final_time;
             else throw ConfigError("'" + k + "': expected space_time or final_time, got '" + v + "'", 0, k);
         }},
        {"limit_harness.test_functions", integer(c.study.test_functions)},
        {"limit_harness.record_wall_time", [&](const std::string& k, const std::string& v) { c.study.record_wall_time = to_bool(k, v); }},
        {"cli.out", [&](const std::string&, const std::string& v) { c.cli.out = v; }},
        {"cli.digits", integer(c.cli.digits)},
    };

    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) throw ConfigError("key '" + section + "' outside a section", 0, section);
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const auto it = keys.find(full);
            if (it == keys.end()) throw ConfigError("unknown key '" + full + "'", 0, full);
            seen.insert(full);
            it->second(full, value.data());
        }
    }

    const auto& k = c.constitutive;
    require(k.rho0 > 0, "constitutive.rho0", "must be > 0");
    require(k.a >= 0, "constitutive.a", "must be >= 0");
    require(k.b >= 0, "constitutive.b", "must be >= 0");
    require(k.c0 > 0, "constitutive.c0", "must be > 0");
    require(k.p_lo < k.p_hi, "constitutive.p_hi", "must exceed p_lo");
    require(k.theta_lo > 0 && k.theta_lo < k.theta_hi, "constitutive.theta_lo", "need 0 < theta_lo < theta_hi");

    auto& n = c.nondim;
    require(n.base.theta_r > 0.5, "nondim.theta_r", "theta + theta_r > 0 must hold for theta in [-1/2, 1/2]");
    require(n.base.vartheta0 > 0, "nondim.vartheta0", "must be > 0");
    require(n.base.pi0 > 0, "nondim.pi0", "must be > 0");
    require(n.base.g > 0, "nondim.g", "must be > 0");
    require(n.base.mu > 0, "nondim.mu", "must be > 0");
    require(3 * n.base.lambda + 2 * n.base.mu >= 0, "nondim.lambda", "3 lambda + 2 mu >= 0 required");
    require(n.base.kappa > 0, "nondim.kappa", "must be > 0");
    require(n.base.length_constant > 0, "nondim.length_constant", "must be > 0");
    require(n.band_lo > 0 && n.band_lo < n.band_hi, "nondim.band_lo", "need 0 < band_lo < band_hi");
    require(n.example_threshold > 0, "nondim.example_threshold", "must be > 0");
    require(n.rect.p_lo < n.rect.p_hi, "nondim.p_hi", "must exceed p_lo");
    require(n.rect.theta_lo < n.rect.theta_hi, "nondim.theta_hi", "must exceed theta_lo");
    require(n.rect.points >= 2 && n.rect.points <= 1001, "nondim.points", "must be in 2..1001");
    if (n.ab_from_model) {
        require(!seen.count("nondim.A") && !seen.count("nondim.B"), "nondim.ab_from_model",
                "A and B cannot be given together with ab_from_model");
        require(k.a > 0 && k.b > 0, "nondim.ab_from_model", "needs constitutive.a > 0 and constitutive.b > 0");
        try {
            const constitutive::GibbsModel<double> model{k.rho0, k.a, k.b, k.c0};
            const auto scales = nondim::scales_from_model(model, n.base);
            const auto ab = nondim::compute_AB(k.a, k.b, scales);
            n.A = ab.A;
            n.B = ab.B;
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("nondim.ab_from_model: ") + e.what(), 0, "nondim.ab_from_model");
        }
    }
    require(n.A >= 0 && n.A < 1, "nondim.A", "must be in [0, 1)");
    require(n.B >= 0 && n.B < 1, "nondim.B", "must be in [0, 1)");

    auto& s = c.solver;
    require(s.nx >= 8 && s.nx <= 4096, "solver.nx", "must be in 8..4096");
    require(s.ny >= 8 && s.ny <= 4096, "solver.ny", "must be in 8..4096");
    require(s.lx > 0, "solver.lx", "must be > 0");
    require(s.dt >= 0, "solver.dt", "must be > 0 or auto");
    require(s.t_end >= 0, "solver.t_end", "must be >= 0");
    require(s.gamma > 0, "solver.gamma", "must be > 0");
    require(s.re_mu > 0, "solver.re_mu", "must be > 0");
    require(s.re_lambda > 0, "solver.re_lambda", "must be > 0 (inf for lambda = 0)");
    require(s.pr > 0, "solver.pr", "must be > 0");
    require(s.c0 > 0, "solver.c0", "must be > 0");
    require(std::abs(s.perturbation) <= 0.5, "solver.perturbation", "|perturbation| <= 1/2");
    require(s.diagnostics_stride >= 1, "solver.diagnostics_stride", "must be >= 1");
    require(s.pcg_tol > 0 && s.pcg_tol < 1, "solver.pcg_tol", "must be in (0, 1)");
    require(s.pcg_max_iter >= 1, "solver.pcg_max_iter", "must be >= 1");
    if (s.system != SystemKind::ob) require(n.A > 0, "nondim.A", "must be > 0 for the expansion and full systems");
    if (s.system == SystemKind::full) require(n.B > 0, "nondim.B", "must be > 0 for the full system");

    auto& st = c.study;
    st.grid = Grid{s.nx, s.ny, s.lx};
    st.dt = s.dt;
    st.t_end = s.t_end;
    st.perturbation = s.perturbation;
    st.groups = c.groups();
    require(st.snapshot_stride >= 1, "limit_harness.snapshot_stride", "must be >= 1");
    require(st.test_functions >= 1 && st.test_functions <= 8, "limit_harness.test_functions", "must be in 1..8");
    for (std::size_t i = 0; i < st.A_sequence.size(); ++i) {
        require(st.A_sequence[i] > 0 && st.A_sequence[i] < 1, "limit_harness.A_sequence", "values must be in (0, 1)");
        if (i > 0) require(st.A_sequence[i] < st.A_sequence[i - 1], "limit_harness.A_sequence", "must be strictly decreasing");
    }
    require(st.b_coefficient > 0, "limit_harness.b_coefficient", "must be > 0");
    require(st.b_exponent > 1, "limit_harness.b_exponent", "must be > 1 so that B = o(A)");
    for (double A : st.A_sequence)
        require(nondim::check_regimes(A, st.B_of(A), n.base.theta_r).B_over_A < 1, "limit_harness.b_coefficient",
                "B rule must give B < A along the sequence");

    require(!c.cli.out.empty(), "cli.out", "must not be empty");
    require(c.cli.digits >= 1 && c.cli.digits <= 17, "cli.digits", "must be in 1..17");
    return c;
}

}  // namespace oblimit::config
