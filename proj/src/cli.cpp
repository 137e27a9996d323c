#include "degsde/cli.hpp"

#include "degsde/config.hpp"
#include "degsde/sde_sim.hpp"
#include "degsde/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace degsde {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

// Write to a sibling temporary, then rename over the target.
void write_atomic(const fs::path& target, const std::string& content, bool binary = false) {
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        f << content;
        f.flush();
        if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void print_summary(std::ostream& out, const EstimateReport& r, const fs::path& dir) {
    out << "experiment  " << r.kind << "\n"
        << "config      " << r.provenance.config_hash << "\n"
        << "seed        " << r.provenance.seed << "\n"
        << "output      " << dir.string() << "\n\n";
    out << std::left << std::setw(28) << "estimate" << std::setw(22) << "parameter" << std::setw(14) << "value"
        << "std_error\n";
    auto row = [&](const Estimate& e) {
        out << std::left << std::setw(28) << e.name << std::setw(22) << e.parameter << std::setw(14)
            << format_value(e.value) << format_value(e.std_error) << "\n";
    };
    for (const auto& e : r.estimates) row(e);
    for (const auto& e : r.fitted) row(e);
    out << "\n";
    for (const auto& v : r.verdicts)
        out << (v.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(28) << v.name << v.detail << "\n";
    if (r.inconclusive_reason) out << "INCONCLUSIVE  " << *r.inconclusive_reason << "\n";
    out << "outcome     " << to_string(r.outcome()) << "\n";
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
            std::optional<unsigned> threads_flag, const std::string& out_dir,
            const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err) {
    RunConfig cfg = load_config(config_path, overrides);

    std::string seed_source = "config";
    std::uint64_t seed = 0;
    if (seed_flag) {
        seed = *seed_flag;
        seed_source = "flag";
    } else if (cfg.seed) {
        seed = *cfg.seed;
    } else {
        seed = entropy_seed();
        seed_source = "entropy";
        err << "note: no seed given; drew " << seed << " from entropy (recorded in the manifest)\n";
    }
    set_seed(cfg, seed);
    if (threads_flag) cfg.threads = *threads_flag;
    const std::string timestamp = utc_timestamp();

    EstimateReport report;
    if (cfg.maximal) {
        cfg.maximal->provenance.timestamp = timestamp;
        report = maximal_suite(*cfg.maximal);
    } else {
        cfg.experiment->threads = cfg.threads;
        cfg.experiment->provenance.timestamp = timestamp;
        report = run_experiment(*cfg.experiment);
    }

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    std::vector<std::string> artifacts;
    write_atomic(dir / "report.json", report.to_json().dump(2) + "\n");
    artifacts.push_back("report.json");
    write_atomic(dir / "report.csv", report.to_csv());
    artifacts.push_back("report.csv");

    if (cfg.trajectory_count > 0 && cfg.experiment) {
        const auto& ec = *cfg.experiment;
        const fs::path tdir = dir / "trajectories";
        fs::create_directories(tdir);
        const std::size_t n = std::min(cfg.trajectory_count, ec.sim.path_count);
        for (std::size_t i = 0; i < n; ++i) {
            const PathSample path = em_path(ec.coeffs, ec.start, ec.sim, i);
            std::ostringstream buf;
            write_trajectory_binary(path, buf);
            char name[32];
            std::snprintf(name, sizeof name, "path_%06zu.bin", i);
            write_atomic(tdir / name, buf.str(), true);
            artifacts.push_back("trajectories/" + std::string(name));
        }
    }

    const Outcome outcome = report.outcome();
    const int code = outcome == Outcome::pass ? kExitPass : kExitFail;
    Json manifest;
    manifest["schema_version"] = kConfigSchemaVersion;
    manifest["config_path"] = config_path;
    manifest["config_hash"] = cfg.hash;
    manifest["resolved_config"] = cfg.resolved;
    manifest["seed"] = seed;
    manifest["seed_source"] = seed_source;
    manifest["threads"] = cfg.threads;
    manifest["output_dir"] = dir.string();
    manifest["artifacts"] = artifacts;
    manifest["outcome"] = std::string(to_string(outcome));
    manifest["exit_status"] = code;
    manifest["code_version"] = std::string(kCodeVersion);
    manifest["timestamp"] = timestamp;
    write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

    print_summary(out, report, dir);
    return code;
}

int cmd_check(const std::string& config_path, const std::vector<std::string>& overrides, std::ostream& out) {
    const RunConfig cfg = load_config(config_path, overrides);
    if (!cfg.coeffs) throw ConfigError("family", "hypothesis checks need a family section");
    const CoefficientSet& c = *cfg.coeffs;
    const int d = c.dim();
    bool all_ok = true;
    auto line = [&](const char* tag, bool ok, const std::string& detail) {
        all_ok = all_ok && ok;
        out << tag << "  " << (ok ? "pass" : "FAIL") << "  " << detail << "\n";
    };
    auto point = [](const Vector& x) {
        std::ostringstream s;
        s << '(';
        for (Eigen::Index i = 0; i < x.size(); ++i) s << (i ? ", " : "") << x[i];
        s << ')';
        return s.str();
    };

    out << "family " << c.info().name << ", d = " << d << ", config " << cfg.hash << "\n";

    // H1: dimension, A = sigma sigma^T at the window centre, exponent window.
    std::optional<ExponentChoice> exponents;
    {
        std::ostringstream s;
        bool ok = true;
        s << "d = " << d << " >= 3";
        try {
            eval_all(c, cfg.check.window.center);
            s << "; A = sigma sigma^T at " << point(cfg.check.window.center);
        } catch (const CoefficientError& e) {
            ok = false;
            s << "; " << e.what();
        }
        if (const auto alpha = c.info().singular_exponent) {
            const double bound = admissible_alpha_bound(d);
            try {
                exponents = select_exponents(d, *alpha, 1.0);
                s << "; alpha = " << *alpha << " < " << bound << ", q = " << exponents->q;
            } catch (const std::invalid_argument& e) {
                ok = false;
                s << "; " << e.what();
            }
        } else {
            ok = false;
            s << "; no analytic exponent for this family";
        }
        line("H1", ok, s.str());
    }
    {
        const H2Report h2 = check_h2(c, cfg.check.n0, cfg.check.plan);
        std::ostringstream s;
        if (h2.feasible) {
            s << "M* = " << h2.m_star << " over " << h2.samples << " samples with |x| > " << cfg.check.n0;
        } else {
            s << "violated at " << point(h2.witness) << " (ratio " << h2.witness_ratio << "); " << h2.diagnostic;
        }
        line("H2", h2.feasible, s.str());
    }
    {
        const H3Report h3 = check_h3_window(c, cfg.check.window);
        std::ostringstream s;
        s << "ball B_" << cfg.check.window.radius << point(cfg.check.window.center) << ": ";
        if (h3.ok) s << "inf psi = " << h3.inf_psi << ", sup psi = " << h3.sup_psi << " over " << h3.samples << " nodes";
        else s << h3.diagnostic << (h3.witness ? " at " + point(*h3.witness) : std::string{});
        line("H3", h3.ok, s.str());
    }
    {
        std::ostringstream s;
        bool ok = c.info().builtin && c.info().smooth_drift && exponents.has_value();
        if (exponents) {
            s << "q~ = " << exponents->q_tilde;
            if (exponents->nondegenerate_limit) s << " (constant dispersion: gradient condition vacuous)";
        }
        s << "; drift " << cfg.resolved["family"]["drift"]["kind"].get<std::string>()
          << (c.info().smooth_drift ? " is smooth" : " regularity unknown");
        line("H4", ok, s.str());
    }
    return all_ok ? kExitPass : kExitFail;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Degenerate SDE numerical laboratory", "degsde"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "degsde_out";
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Config file (JSON)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "64-bit seed; drawn from entropy and recorded when absent");
    auto* threads_opt = run->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--override", overrides, "Dotted key=value applied on top of the config");

    auto* check = app.add_subcommand("check", "Print the hypothesis checklist for the configured family");
    check->add_option("config", config_path, "Config file (JSON)")->required();
    check->add_option("--override", overrides, "Dotted key=value applied on top of the config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (run->parsed()) {
            std::optional<std::uint64_t> s;
            std::optional<unsigned> t;
            if (seed_opt->count()) s = seed;
            if (threads_opt->count()) t = threads;
            return cmd_run(config_path, s, t, out_dir, overrides, out, err);
        }
        return cmd_check(config_path, overrides, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFail;
    }
}

}  // namespace degsde
