#pragma once

// Experiment configs and their runners. A config is a JSON object with a
// "command" field; each command has a fixed set of allowed fields and any
// other field is a schema error. Runners produce artifacts in memory, so a
// failing run writes nothing.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "llt/io.hpp"

namespace llt {

// Overrides from the command line; they take precedence over the config.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<std::string> format;  // csv | json
};

struct RunResult {
  std::vector<Artifact> files;
  Json summary;
  std::string console;  // text for stdout
  int exit_code = 0;    // 1 when a verify run has a failing criterion
};

// Checks the config against the schema of its command and applies the
// overrides. Throws InputError on any violation.
Json validate_config(const Json& config, const RunOptions& opts = {});

// Validates, then runs. Schema problems raise InputError, numerical
// failures raise other Error subclasses.
RunResult execute(const Json& config, const RunOptions& opts = {});

// Exit status for an exception escaping execute(): 2 for InputError, 3 otherwise.
int exit_status(const std::exception& e);

}  // namespace llt
