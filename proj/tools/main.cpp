#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nctori: experiments on noncommutative tori"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: NCTORI_THREADS or all cores)");

  std::string config;
  nctori::cli::RunOptions run_opts;
  auto* run = app.add_subcommand("run", "run the task described by a YAML config");
  run->add_option("config", config, "config file")->required();
  run->add_flag("--check", run_opts.check, "exit 4 when a tolerance check fails");
  run->add_option("--out", run_opts.out_dir, "output directory, overrides output.dir");

  bool corrupt = false;
  std::uint64_t seed = 20240601;
  std::string report;
  auto* self = app.add_subcommand("selftest", "run the invariant suites at small K");
  self->add_flag("--corrupt-phase", corrupt, "inject a phase fault to see the suites catch it");
  self->add_option("--seed", seed, "seed for the random elements");
  self->add_option("--json", report, "also write the report as JSON");

  std::string defaults_path;
  auto* defaults = app.add_subcommand("export-defaults", "print the defaults table");
  defaults->add_option("-o,--output", defaults_path, "write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nctori::cli::ParseError;
  }
  if (threads > 0) setenv("NCTORI_THREADS", std::to_string(threads).c_str(), 1);

  if (*run) {
    auto outcome = nctori::cli::run_config(config, run_opts);
    for (const auto& f : outcome.files) std::cout << "wrote " << f << '\n';
    if (!outcome.document.empty() && outcome.document.contains("checks"))
      for (const auto& c : outcome.document["checks"])
        std::cout << (c["passed"].get<bool>() ? "pass  " : "FAIL  ") << c["name"].get<std::string>() << "  "
                  << c["value"].dump() << " (limit " << c["limit"].dump() << ")\n";
    if (!outcome.diagnostic.empty()) std::cerr << outcome.diagnostic << '\n';
    return outcome.exit_code;
  }
  if (*self) {
    try {
      return nctori::cli::selftest(std::cout, corrupt, seed, report);
    } catch (const std::exception& e) {
      std::cerr << "selftest aborted: " << e.what() << '\n';
      return nctori::cli::NumericFailure;
    }
  }
  if (defaults_path.empty()) {
    std::cout << nctori::cli::defaults_yaml();
  } else {
    std::ofstream os(defaults_path);
    if (!os) {
      std::cerr << "cannot write " << defaults_path << '\n';
      return nctori::cli::Failure;
    }
    os << nctori::cli::defaults_yaml();
  }
  return 0;
}
