#include "ks/cli.hpp"
#include "ks/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

using namespace ks;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ks_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ks_test_" + name)).string();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes are a function of the enums") {
  CHECK(exit_code(Verdict::guaranteed_nontrivial) == 0);
  CHECK(exit_code(Verdict::not_guaranteed) == 1);
  CHECK(exit_code(Verdict::degenerate) == 2);
  SeedReport r;
  CHECK(exit_code(r) == 3);
  r.solutions.push_back({});
  r.solutions.back().classification = Classification::trivial;
  CHECK(exit_code(r) == 1);
  r.solutions.back().classification = Classification::nontrivial;
  CHECK(exit_code(r) == 0);
  CHECK(exit_code(StopReason::completed) == 0);
  CHECK(exit_code(StopReason::resonance) == 1);
}

TEST_CASE("analyze examples") {
  Run r = run({"analyze", "--domain", "disk", "--res", "128", "--beta", "-5", "--rho", "13"});
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["verdict"] == "guaranteed_nontrivial");
  CHECK(j["indices"]["K"] == 1);
  CHECK(j["indices"]["I"] == 2);
  CHECK(j["indices"]["J"] == 2);
  CHECK(j["homology"]["rank"] == 1);
  CHECK(j["homology"]["degree"] == 3);

  r = run({"analyze", "--domain", "unit_square", "--beta", "1", "--rho", "1", "--format", "csv"});
  CHECK(r.code == 1);
  CHECK(r.out.find("not_guaranteed") != std::string::npos);

  r = run({"analyze", "--rho", "12.566370614"});
  CHECK(r.code == 2);
}

TEST_CASE("flags may follow the subcommand or precede it") {
  CHECK(run({"--domain", "disk", "--res", "64", "analyze", "--beta", "-5", "--rho", "13"}).code == 0);
}

TEST_CASE("config file with flag override") {
  const std::string path = temp_path("cfg.ini");
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("domain=disk\nres=64\nbeta=-5\nrho=13\n", f);
    std::fclose(f);
  }
  CHECK(run({"analyze", "--config", path}).code == 0);
  CHECK(run({"analyze", "--config", path, "--beta", "1", "--rho", "1"}).code == 1);
  std::filesystem::remove(path);
}

TEST_CASE("errors map to exit code 3") {
  Run r = run({"solve", "--mesh", "/nonexistent/mesh.txt"});
  CHECK(r.code == 3);
  CHECK(r.err.find("cannot open") != std::string::npos);
  CHECK(run({"analyze", "--domain", "torus"}).code == 3);
  CHECK(run({"analyze", "--format", "xml"}).code == 3);
  CHECK(run({"probe", "--probe", "nothing"}).code == 3);
  CHECK(run({"bogus"}).code == 3);
  CHECK(run({}).code == 3);
}

TEST_CASE("spectrum csv") {
  Run r = run({"spectrum", "--res", "16", "--eigs", "3", "--format", "csv"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("index,lambda\n1,", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);
}

TEST_CASE("probe csv and verdict line") {
  Run r = run({"probe", "--probe", "dirichlet_slope", "--res", "240"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("lambda,dirichlet,mean,logint,energy\n", 0) == 0);
  CHECK(r.out.find("expected 50.2654824574 PASS") != std::string::npos);

  r = run({"probe", "--probe", "dirichlet_slope", "--t", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);

  r = run({"probe", "--probe", "exp_lower", "--res", "64"});
  CHECK(r.code == 0);
  r = run({"probe", "--probe", "l2_upper", "--res", "64", "--t", "0.5"});
  CHECK(r.code == 0);
  r = run({"probe", "--probe", "mt", "--res", "64"});
  CHECK(r.code == 0);
  r = run({"probe", "--probe", "mt", "--res", "64", "--compact", "--atom", "0.5,0.5,interior"});
  CHECK(r.code == 0);
  r = run({"probe", "--probe", "mean_slope", "--res", "128"});
  CHECK(r.code == 0);

  // the default grid is not resolved on a coarse mesh
  r = run({"probe", "--probe", "dirichlet_slope", "--res", "16"});
  CHECK(r.code == 3);
  CHECK(r.err.find("under-resolved") != std::string::npos);
}

TEST_CASE("solve writes a result file") {
  const std::string path = temp_path("solve.json");
  Run r = run({"solve", "--domain", "unit_square", "--res", "16", "--beta", "1", "--rho", "1", "--out", path});
  CHECK(r.code == 1);
  const SolveResult s = solve_result_from_json(json::parse(read_file(path)));
  CHECK(s.classification == Classification::trivial);
  CHECK(s.morse_index.has_value());
  CHECK(s.u.size() == 17 * 17);
  std::filesystem::remove(path);

  r = run({"solve", "--domain", "disk", "--res", "64", "--beta", "-1", "--rho", "12"});
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["classification"] == "nontrivial");
  CHECK(j["residual"].get<real>() < 1e-8);
  CHECK_FALSE(j["morse_index"].is_null());
}

TEST_CASE("continuation csv") {
  Run r = run({"continuation", "--res", "12", "--beta", "1", "--rho", "1", "--rho-end", "5", "--steps", "4", "--format", "csv"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("step,beta,rho,classification,residual,energy,h1\n", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 6);
  r = run({"continuation", "--res", "12", "--beta", "1", "--rho", "10", "--rho-end", "14", "--steps", "4"});
  CHECK(r.code == 1);
  CHECK(json::parse(r.out)["stop"] == "resonance");
}

TEST_CASE("JSON round trips") {
  BarycenterMeasure mu;
  mu.atoms = {{vec2(0.25, 0), 0.4, AtomTag::boundary}, {vec2(0.5, 0.125), 0.6, AtomTag::interior}};
  const BarycenterMeasure mu2 = measure_from_json(json::parse(to_json(mu).dump()));
  REQUIRE(mu2.atoms.size() == 2);
  CHECK(mu2.atoms[1].point == mu.atoms[1].point);
  CHECK(mu2.atoms[0].tag == AtomTag::boundary);
  CHECK(mu2.atoms[1].weight == 0.6);

  JoinPoint z{mu, vec::Unit(3, 2), 0.5};
  CHECK(equivalent(join_point_from_json(json::parse(to_json(z).dump())), z));

  const Mesh m = build_builtin("disk", 64);
  const ConditionReport rep = analyze({-5, 13}, m.area, 0, eigenpairs(m, 6).eigenvalues);
  const json jr = to_json(rep);
  CHECK(to_json(report_from_json(json::parse(jr.dump()))) == jr);

  SolveResult s;
  s.u = vec::LinSpaced(5, -1, 1);
  s.params = {-5, 13};
  s.residual = 1e-11;
  s.energy = -14.5;
  s.classification = Classification::nontrivial;
  s.morse_index = 3;
  s.iterations = 7;
  s.seed = TestConfig{100, z};
  s.note = "x";
  const json js = to_json(s);
  CHECK(to_json(solve_result_from_json(json::parse(js.dump()))) == js);
  CHECK(js["residual"].get<real>() == 1e-11);
}

TEST_CASE("numbers are printed with 12 significant digits") {
  CHECK(fmt12(pi) == "3.14159265359");
  CHECK(round12(1.0 / 3) == 0.333333333333);
  CHECK(to_json(BarycenterMeasure{{{vec2(1.0 / 3, 0), 1, AtomTag::interior}}})["atoms"][0]["x"].get<real>() == 0.333333333333);
}

TEST_CASE("malformed JSON is a parse error") {
  CHECK_THROWS_AS(measure_from_json(json::parse(R"({"atoms":[{"x":1,"y":0,"w":1}]})")), Error);
  CHECK_THROWS_AS(measure_from_json(json::parse(R"({"points":[]})")), Error);
  CHECK_THROWS_AS(measure_from_json(json::parse(R"({"atoms":[{"x":"a","y":0,"w":1,"tag":"interior"}]})")), Error);
}

}
