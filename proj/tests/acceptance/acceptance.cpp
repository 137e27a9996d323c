// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "degsde/cli.hpp"
#include "degsde/coefficients.hpp"
#include "degsde/sde_sim.hpp"
#include "degsde/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace degsde;
namespace fs = std::filesystem;

namespace {

struct Outcome9 {
    bool passed = true;
    std::string detail;
};

// Criterion 9 is checked inside every experiment-running criterion; failures
// are collected here and reported on their own line.
Outcome9 reproducibility;

void note(std::ostringstream& d, bool ok, const std::string& what) {
    d << (ok ? "" : "[x] ") << what << "; ";
}

Vector e1(int d, double s = 1.0) {
    Vector v = Vector::Zero(d);
    v[0] = s;
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string drop_timestamp(const std::string& json) {
    std::istringstream in(json);
    std::string out, line;
    while (std::getline(in, line))
        if (line.find("\"timestamp\"") == std::string::npos) out += line + "\n";
    return out;
}

fs::path scratch() {
    static const fs::path root = fs::temp_directory_path() / ("degsde_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(root);
    return root;
}

// Runs a config twice through the command-line front end and returns the
// parsed report; the two report files must agree byte for byte apart from
// the timestamp line.
struct CliRun {
    int code = -1;
    nlohmann::ordered_json report;
};

CliRun run_twice(const std::string& name, const std::string& config) {
    const fs::path dir = scratch() / name;
    fs::create_directories(dir);
    const fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << config;
    CliRun result;
    std::string first_json, first_csv;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path out = dir / ("run" + std::to_string(rep));
        const std::string cfg_s = cfg.string(), out_s = out.string();
        const char* argv[] = {"degsde", "run", cfg_s.c_str(), "--out", out_s.c_str()};
        std::ostringstream sink, err;
        const int code = run_cli(5, argv, sink, err);
        const std::string json = slurp(out / "report.json"), csv = slurp(out / "report.csv");
        if (rep == 0) {
            result.code = code;
            first_json = json;
            first_csv = csv;
            if (json.empty()) {
                reproducibility.passed = false;
                reproducibility.detail += name + ": no report (" + err.str() + "); ";
                return result;
            }
            result.report = nlohmann::ordered_json::parse(json);
        } else {
            const bool same = code == result.code && drop_timestamp(json) == drop_timestamp(first_json) &&
                              csv == first_csv;
            if (!same) reproducibility.passed = false;
            reproducibility.detail += name + (same ? " identical" : " DIFFERS") + "; ";
        }
    }
    return result;
}

const nlohmann::ordered_json* estimate(const nlohmann::ordered_json& report, const std::string& name,
                                       const std::string& parameter = "") {
    for (const auto* section : {"estimates", "fitted"})
        for (const auto& e : report[section])
            if (e["name"] == name && e["parameter"] == parameter) return &e;
    return nullptr;
}

bool verdict(const nlohmann::ordered_json& report, const std::string& name) {
    for (const auto& v : report["verdicts"])
        if (v["name"] == name) return v["passed"].get<bool>();
    return false;
}

double value(const nlohmann::ordered_json* e) {
    return e && e->at("value").is_number() ? e->at("value").get<double>() : NAN;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome9 criterion1() {
    std::ostringstream d;
    bool ok = true;
    for (int dim : {3, 4, 5}) {
        const double scaled = 0.3 * (dim / (2.0 * dim + 2.0)) / 0.375;
        for (double alpha : {0.0, 0.1, scaled}) {
            const auto c = PowerLawFamily{dim, alpha, 0.0, {}}.build();
            const auto h2 = check_h2(c, 2);
            const auto h3 = check_h3_window(c, {e1(dim, 2.0), 0.5});
            const bool good = h2.feasible && std::isfinite(h2.m_star) && h3.ok;
            ok = ok && good;
            if (!good) note(d, false, "d=" + std::to_string(dim) + " alpha=" + fmt(alpha));
        }
    }
    d << "9 power-law cases feasible with finite M* and window ok; ";
    const auto cubic = PowerLawFamily{3, 0.0, 1.0, DriftSpec::cubic()}.build();
    const auto h2 = check_h2(cubic, 2);
    const bool control = !h2.feasible && h2.witness.size() == 3 && h2.witness.norm() > 2.0;
    ok = ok && control;
    note(d, control, "cubic control infeasible, witness |x| = " + fmt(h2.witness.size() ? h2.witness.norm() : 0.0));
    return {ok, d.str()};
}

Outcome9 criterion2() {
    std::ostringstream d;
    const auto ex = select_exponents(3, 0.3, 1.0);
    const double q_lo = 2 * 3 + 2, q_hi = 3 / 0.3;
    const double t_lo = 1.5, t_hi = std::min(3 / (2 - 0.3), 1.5 + 1.0);
    const bool q_ok = ex.q > q_lo && ex.q < q_hi && std::abs(ex.q - 0.5 * (q_lo + q_hi)) <= 1e-9;
    const bool t_ok = ex.q_tilde > t_lo && ex.q_tilde < t_hi && std::abs(ex.q_tilde - 0.5 * (t_lo + t_hi)) <= 1e-9 &&
                      std::abs(t_hi - 1.7647058823529411) <= 1e-9;
    bool rejected = false;
    try {
        select_exponents(3, 0.375, 1.0);
    } catch (const std::invalid_argument&) {
        rejected = true;
    }
    note(d, q_ok, "q = " + fmt(ex.q) + " in (8, 10)");
    note(d, t_ok, "q~ = " + fmt(ex.q_tilde) + " in (1.5, 1.7647)");
    note(d, rejected, "alpha = 0.375 rejected");
    return {q_ok && t_ok && rejected, d.str()};
}

Outcome9 criterion3() {
    const auto run = run_twice("maximal", R"({
      "schema_version": 1, "experiment": "maximal", "seed": 3,
      "maximal": { "dim": 3, "half_width": 2, "resolution": 64, "refined_resolution": 96,
                   "pairs": 10000, "pair_constant": 8, "pair_fraction": 0.99,
                   "lr_exponents": [2], "stability_tolerance": 0.2 }
    })");
    const auto& r = run.report;
    if (r.is_null()) return {false, "no report"};
    std::ostringstream d;
    const bool dom = verdict(r, "pointwise_domination"), sub = verdict(r, "sublinearity");
    const bool hom = verdict(r, "homogeneity"), pair = verdict(r, "pair_bound");
    const bool stable = verdict(r, "lr_ratio_stable");
    const double fraction = value(estimate(r, "pair_fraction"));
    const double l64 = value(estimate(r, "lr_family_max_r2_n64")), l96 = value(estimate(r, "lr_family_max_r2_n96"));
    note(d, dom, "domination");
    note(d, sub, "sublinearity");
    note(d, hom, "homogeneity");
    note(d, pair && fraction >= 0.99, "pair bound at 8 on " + fmt(100 * fraction) + "% of pairs");
    note(d, stable, "L2 ratio " + fmt(l64) + " -> " + fmt(l96));
    return {run.code == 0 && dom && sub && hom && pair && fraction >= 0.99 && stable, d.str()};
}

Outcome9 criterion4() {
    std::ostringstream d;
    SimConfig s;
    s.step = 1e-3;
    s.horizon = 1.0;
    s.seed = 4;
    const auto additive = ConstantDispersionFamily{3, 1.0, {}}.build();
    const BrownianIncrements w(s.seed, 3, s.step);
    bool brownian = true;
    for (std::uint64_t i = 0; i < 1000 && brownian; ++i) {
        const auto p = em_path(additive, Vector::Zero(3), s, i);
        Vector sum = Vector::Zero(3);
        for (std::size_t k = 0; k < p.increment_count(); ++k) {
            const Vector dw = w.increment(i, k);
            sum += dw;
            brownian = brownian && p.increment(k) == dw && p.state(k + 1) == sum;
        }
    }
    note(d, brownian, "additive control equals W over 1000 paths");

    const auto pl = PowerLawFamily{3, 0.3, 0.0, DriftSpec::linear(-1.0)}.build();
    bool zero = true;
    for (std::uint64_t i = 0; i < 1000 && zero; ++i) {
        const auto pair = em_coupled_pair(pl, e1(3), e1(3), s, i);
        for (double v : pair.distance) zero = zero && v == 0.0;
    }
    note(d, zero, "coupled pair y1 = y2 gives Z = 0 over 1000 paths");
    return {brownian && zero, d.str()};
}

Outcome9 criterion5() {
    const auto run = run_twice("nonexplosion", R"({
      "schema_version": 1, "experiment": "nonexplosion", "seed": 5,
      "family": { "name": "powerlaw", "dim": 3, "alpha": 0.3 },
      "start": [2, 0, 0],
      "sim": { "step": 0.001, "horizon": 1, "paths": 10000, "explosion_threshold": 1e6 }
    })");
    std::ostringstream d;
    const double frac = run.report.is_null() ? NAN : value(estimate(run.report, "exploded_fraction"));
    const bool main_ok = run.code == 0 && frac == 0.0;
    note(d, main_ok, "power law exploded fraction " + fmt(frac));

    ExperimentConfig cfg(ExperimentKind::nonexplosion, PowerLawFamily{3, 0.0, 1.0, DriftSpec::cubic()}.build());
    cfg.start = e1(3, 2.0);
    cfg.sim.step = 1e-3;
    cfg.sim.horizon = 1.0;
    cfg.sim.path_count = 10000;
    cfg.sim.seed = 5;
    const auto control = nonexplosion_experiment(cfg);
    const double cfrac = control.find_estimate("exploded_fraction")->value;
    const bool control_ok = cfrac >= 0.99 && control.outcome() == Outcome::fail;
    note(d, control_ok, "cubic control exploded fraction " + fmt(cfrac));
    return {main_ok && control_ok, d.str()};
}

Outcome9 criterion6() {
    const auto run = run_twice("occupation", R"({
      "schema_version": 1, "experiment": "occupation", "seed": 6,
      "family": { "name": "powerlaw", "dim": 3, "alpha": 0.3, "origin_value": 0 },
      "start": [1, 0, 0],
      "sim": { "step": 0.001, "horizon": 1, "paths": 10000 },
      "occupation": { "thickness": [0.4, 0.2, 0.1, 0.05] },
      "tolerances": { "occupation_fraction": 0.01 }
    })");
    std::ostringstream d;
    const auto& r = run.report;
    if (r.is_null()) return {false, "no report"};
    std::vector<double> means;
    for (const char* e : {"eps=0.4", "eps=0.2", "eps=0.1", "eps=0.05"})
        means.push_back(value(estimate(r, "occupation_mean", e)));
    bool monotone = true;
    for (std::size_t j = 0; j + 1 < means.size(); ++j) monotone = monotone && means[j + 1] <= means[j];
    const bool small = means.back() < 0.01;
    note(d, monotone, "means " + fmt(means[0]) + " " + fmt(means[1]) + " " + fmt(means[2]) + " " + fmt(means[3]));
    note(d, small, "eps=0.05 mean below 0.01 T");

    ExperimentConfig cfg(ExperimentKind::occupation, PowerLawFamily{3, 0.3, 0.0, {}}.build());
    cfg.start = Vector::Zero(3);
    cfg.sim.step = 1e-3;
    cfg.sim.horizon = 1.0;
    cfg.sim.path_count = 10000;
    cfg.sim.seed = 6;
    const auto control = occupation_decay_experiment(cfg);
    const bool control_ok = control.outcome() == Outcome::fail;
    note(d, control_ok, "dispersion-zero control fails");
    return {run.code == 0 && monotone && small && control_ok, d.str()};
}

Outcome9 criterion7() {
    const auto run = run_twice("krylov", R"({
      "schema_version": 1, "experiment": "krylov", "seed": 7,
      "family": { "name": "powerlaw", "dim": 3, "alpha": 0.3, "origin_value": 0 },
      "start": [1, 0, 0],
      "sim": { "step": 0.001, "horizon": 1, "paths": 10000 },
      "krylov": { "spike_indices": [1, 2, 4, 8], "exponent_eps": 1 },
      "tolerances": { "krylov_spread": 3 }
    })");
    std::ostringstream d;
    const auto& r = run.report;
    if (r.is_null()) return {false, "no report"};
    const double qt = r["settings"]["q_tilde"].get<double>();
    const bool q_ok = std::abs(qt - select_exponents(3, 0.3, 1.0).q_tilde) <= 1e-12;
    const double spread = value(estimate(r, "spread"));
    const bool norms = verdict(r, "spike_norm_constant");
    std::string ratios;
    for (const char* k : {"k=1", "k=2", "k=4", "k=8"}) ratios += fmt(value(estimate(r, "ratio", k))) + " ";
    note(d, q_ok, "q~ = " + fmt(qt));
    note(d, norms, "spike norms constant");
    note(d, spread < 3.0, "ratios " + ratios + "max/median " + fmt(spread));
    note(d, r["outcome"] == "pass", "outcome " + r["outcome"].get<std::string>());
    return {run.code == 0 && q_ok && norms && spread < 3.0, d.str()};
}

Outcome9 criterion8() {
    const auto run = run_twice("uniqueness", R"({
      "schema_version": 1, "experiment": "uniqueness", "seed": 8,
      "family": { "name": "powerlaw", "dim": 3, "alpha": 0.3 },
      "start": [1, 0, 0],
      "sim": { "step": 0.00390625, "horizon": 1, "paths": 1000 },
      "uniqueness": { "localization": 4, "levels": 4 },
      "tolerances": { "slope_min": 0.25 }
    })");
    std::ostringstream d;
    const auto& r = run.report;
    if (r.is_null()) return {false, "no report"};
    std::vector<double> e;
    for (const char* h : {"h=0.00390625", "h=0.00195312", "h=0.000976562"})
        e.push_back(value(estimate(r, "self_convergence_error", h)));
    const bool decreasing = e[1] < e[0] && e[2] < e[1];
    const double slope = value(estimate(r, "convergence_slope"));
    note(d, decreasing, "e(h) = " + fmt(e[0]) + " " + fmt(e[1]) + " " + fmt(e[2]));
    note(d, slope >= 0.25, "slope " + fmt(slope));

    const auto control = run_twice("uniqueness_additive", R"({
      "schema_version": 1, "experiment": "uniqueness", "seed": 8,
      "family": { "name": "constant", "dim": 3, "scale": 1 },
      "start": [1, 0, 0],
      "sim": { "step": 0.00390625, "horizon": 1, "paths": 1000 },
      "uniqueness": { "localization": 4, "levels": 4 }
    })");
    bool exact = !control.report.is_null();
    if (exact)
        for (const auto& est : control.report["estimates"])
            if (est["name"] == "self_convergence_error") exact = exact && est["value"] == 0.0;
    note(d, exact, "additive control e(h) = 0 exactly");
    return {run.code == 0 && decreasing && slope >= 0.25 && exact && control.code == 0, d.str()};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        double budget_seconds;
        std::function<Outcome9()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "hypothesis checkers", 10, criterion1},
        {2, "exponent arithmetic", 1, criterion2},
        {3, "maximal suite", 300, criterion3},
        {4, "simulator exactness", 30, criterion4},
        {5, "non-explosion", 600, criterion5},
        {6, "occupation decay", 600, criterion6},
        {7, "Krylov ratio", 600, criterion7},
        {8, "pathwise-uniqueness signature", 900, criterion8},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome9 r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // Criteria that rerun for reproducibility are timed for both runs.
        const bool in_budget = secs <= c.budget_seconds;
        const bool pass = r.passed && in_budget;
        failures += !pass;
        std::cout << "criterion " << c.id << " [" << (pass ? "PASS" : "FAIL") << "] " << c.title << " ("
                  << fmt(secs) << " s of " << fmt(c.budget_seconds) << " s): " << r.detail << std::endl;
    }
    const bool rep = reproducibility.passed && !reproducibility.detail.empty();
    failures += !rep;
    std::cout << "criterion 9 [" << (rep ? "PASS" : "FAIL") << "] reproducibility: " << reproducibility.detail
              << std::endl;
    fs::remove_all(scratch());
    std::cout << (failures ? "acceptance FAILED" : "acceptance passed") << std::endl;
    return failures ? 1 : 0;
}
