/**
 * @file test_scenario.cpp
 * @brief Unit tests for scenario parsing/serialization, the built-in presets,
 *        scenario execution with artifact emission, seed override via the
 *        environment, and the JSON run report.
 */
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "pflow/scenario.hpp"

using namespace pflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::string s((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
    return s;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("pflow_test_" + tag);
    fs::remove_all(dir);
    return dir;
}

const char* kMinimalDoc = R"({
  "name": "mini",
  "system": {
    "A": [[1, 0], [0, -1]],
    "B": [[1], [1]],
    "U": [[-1, 1]]
  },
  "analyses": [{"kind": "decompose"}]
})";

} // namespace

TEST_CASE("analysis kind names round-trip") {
    const std::vector<std::string> names = {
        "decompose", "simulate", "sphere-sim", "exponents", "selgrade",
        "reach",     "chain",    "limits",     "portrait",  "verify-stable"};
    for (const auto& n : names) {
        CHECK(analysis_kind_name(analysis_kind_from_name(n)) == n);
    }
    CHECK_THROWS_WITH_AS(analysis_kind_from_name("warp"),
                         "analyses.kind: unknown analysis \"warp\"",
                         PreconditionError);
}

TEST_CASE("a minimal document fills every default") {
    const Scenario sc = parse_scenario(kMinimalDoc);
    CHECK(sc.name == "mini");
    CHECK(sc.seed == 20240517);
    CHECK(sc.out_dir == "out/mini");
    CHECK(sc.control_kind == "constant");
    CHECK(sc.control.value(3.7).isZero());
    REQUIRE(sc.analyses.size() == 1);
    const AnalysisRequest& r = sc.analyses[0];
    CHECK(r.kind == AnalysisKind::kDecompose);
    CHECK(r.cells_per_axis == 201);
    CHECK(r.half_width == doctest::Approx(2.0));
    CHECK(r.tau == doctest::Approx(2.0));
    CHECK(r.mode == "enclosure");
    CHECK(r.subdivisions == 4);
    CHECK(r.runs == 50);
    CHECK(r.tol == doctest::Approx(0.2));
    CHECK(r.alpha == doctest::Approx(-0.5));
    CHECK(r.delta == doctest::Approx(1e-3));
    CHECK(r.num_seeds == 5);
    CHECK(r.target == "sphere");
    const LinearSystem sys = sc.system();
    CHECK(sys.n() == 2);
    CHECK(sys.m() == 1);
}

TEST_CASE("serialization round-trips exactly for every preset") {
    for (const auto& name : preset_names()) {
        const Scenario sc = scenario_preset(name);
        const std::string once = serialize_scenario(sc);
        const std::string twice = serialize_scenario(parse_scenario(once));
        CHECK(once == twice);
    }
    CHECK(preset_names().size() == 5);
    CHECK_THROWS_AS(scenario_preset("example9"), PreconditionError);
}

TEST_CASE("periodic control parsing and validation") {
    const std::string doc = R"({
      "name": "switching",
      "system": {"A": [[1, 0], [0, -1]], "B": [[1], [1]], "U": [[-1, 1]]},
      "control": {
        "kind": "periodic",
        "breakpoints": [0.0, 1.5],
        "values": [[1.0], [-0.5]],
        "period": 3.0
      },
      "analyses": [{"kind": "simulate", "x0": [0.1, 0.2], "T": 2.0}]
    })";
    const Scenario sc = parse_scenario(doc);
    CHECK(sc.control_kind == "periodic");
    CHECK(sc.control.value(0.5)[0] == doctest::Approx(1.0));
    CHECK(sc.control.value(1.6)[0] == doctest::Approx(-0.5));
    CHECK(sc.control.value(3.5)[0] == doctest::Approx(1.0)); // wrapped
    const std::string echoed = serialize_scenario(sc);
    CHECK(serialize_scenario(parse_scenario(echoed)) == echoed);
}

TEST_CASE("parse errors name the offending path") {
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"system": {}})"),
                         "scenario.name: missing", PreconditionError);
    CHECK_THROWS_WITH_AS(
        parse_scenario(
            R"({"name": "x", "system": {"A": [[1]], "B": [[1]], "U": [[0.5, 1]]},
                "analyses": []})"),
        "system.U[0]: must satisfy lo < 0 < hi", PreconditionError);
    CHECK_THROWS_WITH_AS(
        parse_scenario(
            R"({"name": "x", "system": {"A": [[1, 0]], "B": [[1]], "U": [[-1, 1]]},
                "analyses": []})"),
        "system.A: must be square", PreconditionError);
    CHECK_THROWS_AS(parse_scenario("not json at all"), PreconditionError);
    CHECK_THROWS_AS(parse_scenario(R"({"name": "x"})"), PreconditionError);
}

TEST_CASE("running the saddle preset emits every artifact and passes") {
    unsetenv("PFLOW_SEED"); // keep the scenario seed authoritative
    Scenario sc = scenario_preset("example1");
    const fs::path dir = fresh_dir("preset1");
    sc.out_dir = dir.string();

    const RunReport report = run_scenario(sc);
    CHECK(report.name == "example1");
    CHECK(report.seed == 20240517);
    REQUIRE(report.analyses.size() == 8);
    for (const auto& a : report.analyses) {
        INFO(a.kind, ": ", a.detail);
        CHECK(a.passed);
        CHECK(a.seconds >= 0.0);
    }
    CHECK(report.all_passed);

    for (const char* file :
         {"scenario.json", "report.json", "decompose.csv", "simulate.csv",
          "sphere_sim.csv", "reach.csv", "chain_1.csv", "chain_2.csv",
          "limits.csv", "portrait_example1.svg"}) {
        INFO(file);
        CHECK(fs::exists(dir / file));
        CHECK(fs::file_size(dir / file) > 0);
    }

    // The echoed scenario.json is the exact serialization (re-parseable).
    const std::string echoed = slurp(dir / "scenario.json");
    CHECK(echoed == serialize_scenario(sc));

    // report.json carries the same outcome, structured.
    const nlohmann::json rj = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(rj["name"] == "example1");
    CHECK(rj["all_passed"] == true);
    CHECK(rj["analyses"].size() == 8);
    CHECK(rj["analyses"][0].contains("kind"));
    CHECK(rj["analyses"][0].contains("passed"));
    CHECK(rj["analyses"][0].contains("detail"));
    CHECK(rj["analyses"][0].contains("seconds"));
    CHECK(rj["analyses"][0].contains("metrics"));
    CHECK(report_to_json(report) == slurp(dir / "report.json"));

    fs::remove_all(dir);
}

TEST_CASE("artifacts are byte-identical across runs") {
    Scenario sc = parse_scenario(kMinimalDoc);
    AnalysisRequest sim;
    sim.kind = AnalysisKind::kSimulate;
    sim.x0 = (Vec(2) << 0.4, -0.3).finished();
    sim.T = 4.0;
    sim.dt = 0.05;
    sc.analyses.push_back(sim);
    AnalysisRequest portrait;
    portrait.kind = AnalysisKind::kPortrait;
    portrait.target = "plane";
    portrait.cells_per_axis = 41;
    sc.analyses.push_back(portrait);

    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    sc.out_dir = a.string();
    const RunReport ra = run_scenario(sc);
    sc.out_dir = b.string();
    const RunReport rb = run_scenario(sc);
    CHECK(ra.all_passed);
    CHECK(rb.all_passed);

    for (const char* file :
         {"decompose.csv", "simulate.csv", "portrait_mini.svg"}) {
        INFO(file);
        CHECK(slurp(a / file) == slurp(b / file));
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("the environment seed overrides the scenario seed") {
    Scenario sc = parse_scenario(kMinimalDoc);
    const fs::path dir = fresh_dir("seed");
    sc.out_dir = dir.string();

    REQUIRE(setenv("PFLOW_SEED", "999", 1) == 0);
    const RunReport report = run_scenario(sc);
    CHECK(report.seed == 999);

    REQUIRE(setenv("PFLOW_SEED", "brontosaurus", 1) == 0);
    CHECK_THROWS_AS(run_scenario(sc), PreconditionError);
    REQUIRE(unsetenv("PFLOW_SEED") == 0);

    const RunReport plain = run_scenario(sc);
    CHECK(plain.seed == sc.seed);
    fs::remove_all(dir);
}
