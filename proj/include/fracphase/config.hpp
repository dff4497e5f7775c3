#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>

#include "fracphase/stepper.hpp"

namespace fracphase {

/// Initial condition named in a config file or on the command line.
struct InitialCondition {
  enum class Kind { Random, Sine, File };
  Kind kind = Kind::Random;
  std::filesystem::path path;  // Kind::File only

  /// "random", "sine" or "file:PATH"
  static InitialCondition parse(const std::string& text);
  std::string to_string() const;
};

/// Everything a config file can set. `run` is validated.
struct CliConfig {
  RunConfig run;
  InitialCondition ic;
  std::optional<std::filesystem::path> output_dir;
  int snapshot_every = 0;  // 0 = only the final state
};

/// Parses the `[section]` / `key = value` format. Sections and keys:
///
///   [model]   alpha*, eps*, ic, seed
///   [mesh]    M*, N*, T*, a, b, kind (uniform|graded), gamma
///   [solver]  scheme*, fp_tol, fp_max_iter
///   [output]  dir, snapshot_every
///
/// Starred keys are required. '#' and ';' start comments. Unknown sections or
/// keys are BAD_VALUE; missing required keys are MISSING_KEY. Messages carry
/// the line number where one exists.
CliConfig parse_config(std::istream& in, const std::string& source = "<config>");
CliConfig parse_config(const std::filesystem::path& path);

}  // namespace fracphase
