#include "degsde/cli.hpp"
#include "degsde/config.hpp"
#include "degsde/sde_sim.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace degsde;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("degsde_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path write_config(const TempDir& dir, const std::string& name, const std::string& body) {
    const fs::path p = dir.path / name;
    std::ofstream(p) << body;
    return p;
}

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "degsde");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const char* kNonexplosion = R"({
  "schema_version": 1,
  "experiment": "nonexplosion",
  "family": { "name": "powerlaw", "dim": 3, "alpha": 0.3 },
  "start": [2, 0, 0],
  "sim": { "step": 0.01, "horizon": 1, "paths": 200 },
  "output": { "trajectories": 2 }
})";

}  // namespace

TEST_CASE("run writes report, tables and manifest") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", kNonexplosion);
    const auto out = dir.path / "out";
    const auto r = cli({"run", cfg.string(), "--seed", "5", "--out", out.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS  no_explosion") != std::string::npos);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "report.csv"));
    REQUIRE(fs::exists(out / "manifest.json"));
    for (const auto& e : fs::recursive_directory_iterator(out)) CHECK(e.path().extension() != ".tmp");

    const auto manifest = nlohmann::ordered_json::parse(read_file(out / "manifest.json"));
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["seed_source"] == "flag");
    CHECK(manifest["exit_status"] == 0);
    CHECK(manifest["config_hash"] == fnv1a_hex(manifest["resolved_config"].dump()));
    CHECK(manifest["artifacts"].size() == 4);

    const auto report = nlohmann::ordered_json::parse(read_file(out / "report.json"));
    CHECK(report["config_hash"] == manifest["config_hash"]);
    CHECK(report["provenance"]["seed"] == 5);
    CHECK(report["settings"]["tolerances"].contains("krylov_spread"));

    std::ifstream traj(out / "trajectories" / "path_000001.bin", std::ios::binary);
    const auto p = read_trajectory_binary(traj);
    CHECK(p.path_index == 1);
    CHECK(p.seed == 5);
    CHECK(p.state_count() == 101);
}

TEST_CASE("repeat runs are byte-identical apart from the timestamp") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", kNonexplosion);
    const auto a = dir.path / "a", b = dir.path / "b";
    CHECK(cli({"run", cfg.string(), "--seed", "9", "--out", a.string()}).code == 0);
    CHECK(cli({"run", cfg.string(), "--seed", "9", "--out", b.string(), "--threads", "3"}).code == 0);
    auto ja = nlohmann::ordered_json::parse(read_file(a / "report.json"));
    auto jb = nlohmann::ordered_json::parse(read_file(b / "report.json"));
    ja["provenance"].erase("timestamp");
    jb["provenance"].erase("timestamp");
    CHECK(ja.dump(2) == jb.dump(2));
    CHECK(read_file(a / "report.csv") == read_file(b / "report.csv"));
    CHECK(read_file(a / "trajectories" / "path_000000.bin") == read_file(b / "trajectories" / "path_000000.bin"));
}

TEST_CASE("seed falls back to the config, then to entropy") {
    TempDir dir;
    auto cfg = write_config(dir, "c.json", kNonexplosion);
    const auto out = dir.path / "o";
    auto r = cli({"run", cfg.string(), "--out", out.string(), "--override", "seed=77"});
    CHECK(r.code == 0);
    auto m = nlohmann::ordered_json::parse(read_file(out / "manifest.json"));
    CHECK(m["seed"] == 77);
    CHECK(m["seed_source"] == "config");

    r = cli({"run", cfg.string(), "--out", out.string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("entropy") != std::string::npos);
    m = nlohmann::ordered_json::parse(read_file(out / "manifest.json"));
    CHECK(m["seed_source"] == "entropy");
    const auto report = nlohmann::ordered_json::parse(read_file(out / "report.json"));
    CHECK(report["provenance"]["seed"] == m["seed"]);
}

TEST_CASE("inadmissible alpha exits with a usage error citing the bound") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", kNonexplosion);
    const auto r = cli({"run", cfg.string(), "--override", "family.alpha=0.5", "--out", (dir.path / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("family.alpha") != std::string::npos);
    CHECK(r.err.find("0.375") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "o"));
}

TEST_CASE("config errors name the offending field") {
    TempDir dir;
    auto expect_field = [&](const std::string& override, const std::string& field) {
        const auto cfg = write_config(dir, "c.json", kNonexplosion);
        const auto r = cli({"check", cfg.string(), "--override", override});
        CHECK(r.code == 2);
        CHECK(r.err.find(field) != std::string::npos);
    };
    expect_field("sim.paths=50", "sim.paths");
    expect_field("sim.stepp=0.1", "sim.stepp");
    expect_field("family.name=\"nope\"", "family.name");
    expect_field("family.dim=2", "family.dim");
    expect_field("schema_version=2", "schema_version");
    expect_field("experiment=\"bogus\"", "experiment");
    expect_field("start=[1,2]", "start");
    expect_field("krylov.q_tilde=2", "krylov");

    const auto broken = write_config(dir, "broken.json", "{ not json");
    CHECK(cli({"run", broken.string()}).code == 2);
    CHECK(cli({"run", (dir.path / "missing.json").string()}).code == 2);
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"run"}).code == 2);
    CHECK(cli({"run", "x.json", "--seed", "abc"}).code == 2);
    const auto help = cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("run") != std::string::npos);
}

TEST_CASE("check prints one line per hypothesis") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", kNonexplosion);
    const auto ok = cli({"check", cfg.string()});
    CHECK(ok.code == 0);
    for (const char* h : {"H1  pass", "H2  pass", "H3  pass", "H4  pass"}) CHECK(ok.out.find(h) != std::string::npos);

    const auto cubic = cli({"check", cfg.string(), "--override", "family.alpha=0", "--override",
                            "family.origin_value=1", "--override", "family.drift.kind=\"cubic\""});
    CHECK(cubic.code == 1);
    CHECK(cubic.out.find("H2  FAIL  violated at (") != std::string::npos);

    const auto window = cli({"check", cfg.string(), "--override", "check.window.center=[0,0,0]"});
    CHECK(window.code == 1);
    CHECK(window.out.find("H3  FAIL") != std::string::npos);
}

TEST_CASE("failed verdicts exit with status one") {
    TempDir dir;
    const auto cfg = write_config(dir, "c.json", R"({
      "schema_version": 1, "experiment": "occupation", "seed": 3,
      "family": { "name": "powerlaw", "alpha": 0.3 },
      "start": [0, 0, 0], "sim": { "step": 0.01, "paths": 100 }
    })");
    const auto r = cli({"run", cfg.string(), "--out", (dir.path / "o").string()});
    CHECK(r.code == 1);
    const auto m = nlohmann::ordered_json::parse(read_file(dir.path / "o" / "manifest.json"));
    CHECK(m["outcome"] == "fail");
    CHECK(m["exit_status"] == 1);
}

TEST_CASE("overrides") {
    nlohmann::ordered_json t = {{"a", {{"b", 1}}}};
    apply_override(t, "a.b=2.5");
    apply_override(t, "a.c.d=[1,2]");
    apply_override(t, "name=hello");
    apply_override(t, "flag=true");
    CHECK(t["a"]["b"] == 2.5);
    CHECK(t["a"]["c"]["d"] == nlohmann::ordered_json::array({1, 2}));
    CHECK(t["name"] == "hello");
    CHECK(t["flag"] == true);
    CHECK_THROWS_AS(apply_override(t, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(t, "a..b=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(t, "name.x=1"), ConfigError);
}

TEST_CASE("resolved config fills defaults and hashes canonically") {
    const auto a = parse_config(R"({"schema_version":1,"experiment":"krylov","family":{"name":"powerlaw","alpha":0.3}})");
    const auto b = parse_config(
        R"({"experiment":"krylov","schema_version":1,"family":{"alpha":0.3,"name":"powerlaw","dim":3},"sim":{"step":0.001}})");
    CHECK(a.hash == b.hash);
    CHECK(a.resolved["krylov"]["q_tilde"].get<double>() == doctest::Approx(select_exponents(3, 0.3, 1.0).q_tilde));
    CHECK(a.resolved["sim"]["paths"] == 1000);
    CHECK(a.resolved["start"] == nlohmann::ordered_json::array({1.0, 0.0, 0.0}));
    const auto seeded = parse_config(
        R"({"schema_version":1,"experiment":"krylov","seed":4,"threads":2,"family":{"name":"powerlaw","alpha":0.3}})");
    CHECK(seeded.hash == a.hash);
    CHECK(seeded.seed == 4u);
    CHECK(seeded.threads == 2u);

    const auto m = parse_config(R"({"schema_version":1,"experiment":"maximal"})");
    REQUIRE(m.maximal.has_value());
    CHECK(m.maximal->pair_constant == 8.0);
    CHECK_FALSE(m.coeffs.has_value());
    CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"experiment":"maximal","sim":{}})"), ConfigError);
}
