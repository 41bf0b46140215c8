#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cmj/errors.hpp"
#include "cmj/experiment.hpp"

using namespace cmj;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("cmj_test_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    return p;
}

json logistic(const std::string& kind) {
    return json::parse(R"({
      "kind": ")" + kind + R"(",
      "model": {"tau": {"family": "constant", "rate": 1},
                "g": {"family": "exponential", "rate": 1},
                "C": {"rule": "immunity", "K": 10}},
      "numeric": {"T": 1, "dt": 0.001, "report_step": 0.25},
      "run": {"N": [40], "replicates": 3, "seed": 5, "M": 200, "times": [0.5, 1]}
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void expect_field_error(json j, const std::string& field) {
    try {
        parse_config(j);
        FAIL("accepted a bad config; expected an error on " << field);
    } catch (const ConfigError& e) {
        CHECK_MESSAGE(std::string(e.what()).rfind(field, 0) == 0, e.what());
    }
}

int run_cli(const std::string& args) {
    const char* exe = std::getenv("CMJSIM");
    REQUIRE_MESSAGE(exe, "CMJSIM not set");
    const int rc = std::system((std::string(exe) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("config round trip") {
    const auto c = parse_config(logistic("simulate"));
    CHECK(c.kind == "simulate");
    CHECK(c.run.N == std::vector<int>{40});
    CHECK(parse_config(dump_config(c)) == c);
    CHECK(dump_config(parse_config(dump_config(c))) == dump_config(c));

    auto j = logistic("solve");
    j["model"]["tau"] = {{"family", "tabulated"}, {"ages", {0, 1, 2}}, {"values", {1, 1, 0.5}}};
    j["model"]["C"]["lipschitz"] = 0.5;
    j["numeric"]["A_max"] = 12.0;
    const auto c2 = parse_config(j);
    CHECK(parse_config(dump_config(c2)) == c2);
    CHECK(*c2.C.lipschitz == 0.5);
}

TEST_CASE("tabulated rates from a csv file") {
    const auto dir = scratch("csv");
    fs::create_directories(dir);
    std::ofstream(dir / "tau.csv") << "age,value\n0,2\n1,1\n3,0\n";
    auto j = logistic("solve");
    j["model"]["tau"] = {{"family", "tabulated"}, {"csv", "tau.csv"}};
    std::ofstream(dir / "cfg.json") << j.dump();
    const auto c = load_config(dir / "cfg.json");
    CHECK(c.tau.ages == std::vector<double>{0, 1, 3});
    CHECK(c.tau.values == std::vector<double>{2, 1, 0});
    CHECK(parse_config(dump_config(c)) == c);
    j["model"]["tau"]["csv"] = "missing.csv";
    CHECK_THROWS_AS(parse_config(j, dir), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("validation names the offending field") {
    auto j = logistic("solve");
    j["numeric"]["dt"] = 0.05;
    expect_field_error(j, "numeric.dt");
    j = logistic("solve");
    j["numeric"]["T"] = 1.0005;
    expect_field_error(j, "numeric.dt");
    j = logistic("solve");
    j["model"]["C"]["K"] = -1;
    expect_field_error(j, "model.C");
    j = logistic("solve");
    j["model"]["C"]["lipschitz"] = 0.01;
    expect_field_error(j, "model.C.lipschitz");
    j = logistic("solve");
    j["model"]["tau"]["rate"] = "fast";
    expect_field_error(j, "model.tau.rate");
    j = logistic("solve");
    j["model"]["tau"]["decay"] = 1.0;  // not a parameter of the constant family
    expect_field_error(j, "model.tau.decay");
    j = logistic("solve");
    j["run"]["colour"] = "red";
    expect_field_error(j, "run.colour");
    j = logistic("solve");
    j["run"]["N"] = {10, 0};
    expect_field_error(j, "run.N[1]");
    j = logistic("nope");
    expect_field_error(j, "kind");
    j = logistic("convergence");
    expect_field_error(j, "run.N");
    j["run"]["N"] = {10, 20, 40};
    expect_field_error(j, "run.replicates");
    j = logistic("couple");
    j["model"]["C"] = {{"rule", "lockdown"}, {"K", 10}, {"kappa", 0.5}, {"theta", 0.5}};
    expect_field_error(j, "model.C.rule");
    j = logistic("nonlinear");
    j["run"]["times"] = {2.0};
    expect_field_error(j, "run.times[0]");
    j = logistic("solve");
    j["model"]["tau"] = {{"family", "atoms"}, {"ages", {0.5, 1.0}}};
    expect_field_error(j, "model.tau.family");
}

TEST_CASE("convergence report") {
    std::vector<ConvergenceSample> s;
    for (int N : {100, 400, 1600}) {
        ConvergenceSample c{N, {}};
        for (int r = 0; r < 30; ++r) c.sup_distances.push_back((1.0 + 0.01 * r) / std::sqrt(N));
        s.push_back(c);
    }
    const auto t = convergence_report(s);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.slope == doctest::Approx(-0.5));
    CHECK(t.rows[0].median == doctest::Approx(1.145 / 10.0));
    CHECK(t.rows[0].q25 < t.rows[0].median);
    CHECK(convergence_report(s).slope == t.slope);
    CHECK_THROWS_AS(convergence_report(std::span(s).first(1)), ConfigError);
    s[1].sup_distances.resize(29);
    CHECK_THROWS_AS(convergence_report(s), ConfigError);
}

TEST_CASE("runs are reproducible and thread-count independent") {
    for (const std::string kind : {"solve", "simulate", "nonlinear", "couple", "immigration", "chains"}) {
        CAPTURE(kind);
        const auto c = parse_config(logistic(kind));
        const auto a = scratch(kind + "_a"), b = scratch(kind + "_b");
        run_experiment(c, a, 1);
        run_experiment(c, b, 3);
        CHECK_FALSE(fs::exists(fs::path(a.string() + ".partial")));
        std::size_t files = 0;
        for (const auto& e : fs::directory_iterator(a)) {
            ++files;
            CHECK_MESSAGE(slurp(e.path()) == slurp(b / e.path().filename()), e.path().filename().string());
        }
        CHECK(files >= 3);
        const auto m = json::parse(slurp(a / "manifest.json"));
        CHECK(m["seed"] == 5);
        CHECK(m["config_sha256"] == sha256_hex(dump_config(c).dump()));
        CHECK(parse_config(m["config"]) == c);
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST_CASE("solve on the linear case writes b = e^t") {
    auto j = logistic("solve");
    j["model"]["C"] = {{"rule", "constant"}, {"c", 1}};
    const auto out = scratch("linear");
    run_experiment(parse_config(j), out, 1);
    std::ifstream in(out / "pde.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,b,mass,C");
    double worst = 0.0;
    while (std::getline(in, line)) {
        double t, b;
        CHECK(std::sscanf(line.c_str(), "%lf,%lf", &t, &b) == 2);
        worst = std::max(worst, std::abs(b / std::exp(t) - 1.0));
    }
    CHECK(worst < 1e-3);
    fs::remove_all(out);
}

TEST_CASE("simulate with C = 0 keeps mass 1") {
    auto j = logistic("simulate");
    j["model"]["C"] = {{"rule", "constant"}, {"c", 0}};
    const auto out = scratch("frozen");
    run_experiment(parse_config(j), out, 1);
    std::ifstream in(out / "mass_N40.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        double t, m, se;
        CHECK(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &m, &se) == 3);
        CHECK(m == 1.0);
        ++rows;
    }
    CHECK(rows == 5);
    fs::remove_all(out);
}

TEST_CASE("failed runs leave nothing behind") {
    // C ≡ 0 absorbs the backward chains: a runtime failure after outputs started
    auto j = logistic("chains");
    j["model"]["C"] = {{"rule", "constant"}, {"c", 0}};
    const auto out = scratch("broken");
    CHECK_THROWS_AS(run_experiment(parse_config(j), out, 1), DomainError);
    CHECK_FALSE(fs::exists(out));
    CHECK_FALSE(fs::exists(fs::path(out.string() + ".partial")));
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    std::ofstream(dir / "ok.json") << logistic("solve").dump();
    auto bad = logistic("solve");
    bad["numeric"]["dt"] = -1;
    std::ofstream(dir / "bad.json") << bad.dump();
    auto absorbed = logistic("chains");
    absorbed["model"]["C"] = {{"rule", "constant"}, {"c", 0}};
    std::ofstream(dir / "absorbed.json") << absorbed.dump();

    const auto d = dir.string();
    CHECK(run_cli("solve --config " + d + "/ok.json --out " + d + "/o1") == 0);
    CHECK(fs::exists(dir / "o1" / "pde.csv"));
    CHECK(run_cli("simulate --config " + d + "/ok.json --out " + d + "/o2 --seed 9 --threads 2") == 0);
    CHECK(json::parse(slurp(dir / "o2" / "manifest.json"))["seed"] == 9);
    CHECK(run_cli("solve --config " + d + "/bad.json --out " + d + "/o3") == 2);
    CHECK(run_cli("solve --config " + d + "/missing.json --out " + d + "/o3") == 2);
    CHECK(run_cli("solve --out " + d + "/o3") == 2);
    CHECK(run_cli("frobnicate --config " + d + "/ok.json --out " + d + "/o3") == 2);
    CHECK(run_cli("chains --config " + d + "/absorbed.json --out " + d + "/o4") == 3);
    CHECK_FALSE(fs::exists(dir / "o4"));
    fs::remove_all(dir);
}
