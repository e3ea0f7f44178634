#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace nctori::cli;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "nctori_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_config(const std::string& name, const std::string& body) {
  const auto p = scratch() / (name + ".yaml");
  std::ofstream(p) << body;
  return p.string();
}

RunOptions to_scratch(bool check = false) {
  RunOptions o;
  o.check = check;
  o.out_dir = (scratch() / "out").string();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("weyl task") {
  auto cfg = write_config("weyl", "task: weyl\noutput: {stem: weyl}\nparams: {lambda_cut: 400, compare_theta: 0.0}\n");
  auto r = run_config(cfg, to_scratch(true));
  INFO(r.diagnostic);
  REQUIRE(r.exit_code == Ok);
  const auto& res = r.document["result"];
  CHECK(std::abs(res["ratio"].get<double>() - 1.0) < 0.05);
  CHECK(res["count"].get<int>() == 1257);
  CHECK(res["theta_independent"].get<bool>());
  CHECK(r.document["seed"].get<std::uint64_t>() == 20240601u);
  CHECK(r.document["config"]["truncation"]["K"].get<int>() == 25);
  CHECK(fs::exists(scratch() / "out" / "weyl.json"));
  CHECK(slurp(scratch() / "out" / "weyl_eigenvalues.csv").rfind("index,value\n", 0) == 0);
}

TEST_CASE("algebra check at theta = 0") {
  auto cfg = write_config("alg", "task: algebra-check\ntheta: 0\noutput: {stem: alg}\nparams: {K: 6, trials: 2}\n");
  auto r = run_config(cfg, to_scratch(true));
  REQUIRE(r.exit_code == Ok);
  CHECK(r.document["passed"].get<bool>());
  CHECK(r.document["checks"].size() == 8);
}

TEST_CASE("flat parametrix has one nonzero component") {
  auto cfg = write_config("par", "task: parametrix\noutput: {stem: par}\nparams: {operator: laplacian, radii: [4, 8]}\n");
  auto r = run_config(cfg, to_scratch(true));
  INFO(r.diagnostic);
  REQUIRE(r.exit_code == Ok);
  CHECK(r.document["result"]["nonzero_components"].get<int>() == 1);
  CHECK(r.document["result"]["base_order"].get<double>() == -2.0);
}

TEST_CASE("same config and seed give the same document") {
  auto cfg = write_config("dual", "task: duality\nseed: 77\noutput: {stem: dual}\nparams: {trials: 200, s: -0.5}\n");
  auto a = run_config(cfg, to_scratch());
  const std::string first = slurp(scratch() / "out" / "dual.json");
  auto b = run_config(cfg, to_scratch());
  REQUIRE(a.exit_code == Ok);
  REQUIRE(b.exit_code == Ok);
  CHECK(canonical_dump(a.document) == canonical_dump(b.document));
  CHECK(a.document.contains("timestamps"));
  CHECK(canonical_dump(a.document).find("timestamps") == std::string::npos);
  CHECK(a.document["seed"].get<int>() == 77);
  auto c = run_config(write_config("dual2", "task: duality\nseed: 78\noutput: {stem: dual2}\nparams: {trials: 200}\n"),
                      to_scratch());
  CHECK(canonical_dump(c.document) != canonical_dump(a.document));
  CHECK(first.find("\"timestamps\"") != std::string::npos);
}

TEST_CASE("config errors exit with 2") {
  const std::vector<std::pair<std::string, std::string>> bad{
      {"syntax", "task: weyl\nparams: [unclosed\n"},
      {"task", "task: nonsense\n"},
      {"nokey", "seed: 3\n"},
      {"unknown", "task: weyl\ncolour: blue\n"},
      {"margin", "task: spectrum\ntruncation: {K: 2, margin: 2}\n"},
      {"file", "task: duality\nparams: {element: {file: missing.txt}}\n"},
      {"symbol", "task: spectrum\nparams: {symbol: {kind: wavelet}}\n"},
      {"theta", "task: weyl\ndimension: 3\ntheta: 0.2\n"},
  };
  for (const auto& [name, body] : bad) {
    auto r = run_config(write_config("bad_" + name, body), to_scratch());
    INFO(name << ": " << r.diagnostic);
    CHECK(r.exit_code == ParseError);
    CHECK(!r.diagnostic.empty());
  }
  CHECK(run_config((scratch() / "absent.yaml").string()).exit_code == ParseError);
}

TEST_CASE("numeric failures exit with 3") {
  // order 2 is not below -n, so the trace routines refuse
  auto r = run_config(write_config("num", "task: trace\noutput: {stem: num}\nparams: {symbol: laplacian, K: 8}\n"),
                      to_scratch());
  CHECK(r.exit_code == NumericFailure);
  auto gap = run_config(write_config("gap", R"(task: parametrix
output: {stem: gap}
params:
  operator:
    kind: laplace_beltrami
    metric: {g: [[{terms: [[0, 0, 1.0], [1, 0, 0.6], [-1, 0, 0.6]]}, 0], [0, 1]]}
)"),
                        to_scratch());
  CHECK(gap.exit_code == NumericFailure);
}

TEST_CASE("tolerance breaches exit with 4 only under --check") {
  auto cfg = write_config("tight", "task: weyl\noutput: {stem: tight}\nparams: {tolerance: 1.0e-9}\n");
  auto loose = run_config(cfg, to_scratch(false));
  CHECK(loose.exit_code == Ok);
  CHECK(!loose.document["passed"].get<bool>());
  auto strict = run_config(cfg, to_scratch(true));
  CHECK(strict.exit_code == ToleranceBreach);
  CHECK(strict.diagnostic.find("weyl ratio") != std::string::npos);
}

TEST_CASE("element files are read relative to the config") {
  std::ofstream(scratch() / "u.txt") << "# k1 k2 re im\n0 0 1.0 0.0\n2 -1 0.5 0.25\n";
  auto r = run_config(write_config("fromfile", "task: duality\noutput: {stem: ff}\nparams: {element: {file: u.txt}}\n"),
                      to_scratch(true));
  INFO(r.diagnostic);
  REQUIRE(r.exit_code == Ok);
  CHECK(r.document["result"]["violations"].get<int>() == 0);
}

TEST_CASE("selftest") {
  std::ostringstream clean;
  CHECK(selftest(clean, false, 20240601) == Ok);
  CHECK(clean.str().find("FAIL") == std::string::npos);
  CHECK(clean.str().find("associativity") != std::string::npos);
  CHECK(clean.str().find("s\n") != std::string::npos);

  std::ostringstream broken;
  const auto json = (scratch() / "selftest.json").string();
  CHECK(selftest(broken, true, 20240601, json) == ToleranceBreach);
  bool assoc_failed = false;
  std::istringstream lines(broken.str());
  for (std::string line; std::getline(lines, line);)
    assoc_failed = assoc_failed || (line.rfind("FAIL", 0) == 0 && line.find("associativity") != std::string::npos);
  CHECK(assoc_failed);
  CHECK(slurp(json).find("\"corrupt_phase\": true") != std::string::npos);
  // the fault does not outlive the run
  std::ostringstream again;
  CHECK(selftest(again, false, 20240601) == Ok);
}

TEST_CASE("defaults table") {
  const auto& d = defaults_yaml();
  for (const char* key : {"seed:", "truncation:", "tasks:", "weyl:", "trace:", "lambda_cut: 400"})
    CHECK(d.find(key) != std::string::npos);
}
