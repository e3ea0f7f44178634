#pragma once
// Batch driver behind the nctori executable: YAML experiment configs in,
// JSON results and CSV series out.
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace nctori::cli {

enum ExitCode : int { Ok = 0, Failure = 1, ParseError = 2, NumericFailure = 3, ToleranceBreach = 4 };

/// Malformed or inconsistent configuration (exit 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The defaults table, as YAML with comments. Configs are merged over it.
const std::string& defaults_yaml();

struct RunOptions {
  bool check = false;      ///< tolerance breaches turn into exit 4
  std::string out_dir;     ///< overrides output.dir
};

struct RunOutcome {
  int exit_code = Ok;
  nlohmann::ordered_json document;  ///< empty when the config did not parse
  std::vector<std::string> files;   ///< written outputs
  std::string diagnostic;
};

RunOutcome run_config(const std::string& config_path, const RunOptions& opts = {});

/// Prints one line per check with its wall time; returns 0 when everything
/// passes, 4 otherwise. Writes a JSON report when json_path is not empty.
int selftest(std::ostream& os, bool corrupt_phase, std::uint64_t seed, const std::string& json_path = "");

/// The document without its "timestamps" field, dumped; equal for equal
/// config and seed.
std::string canonical_dump(const nlohmann::ordered_json& document);

}  // namespace nctori::cli
