#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace fredholm::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_not_solvable = 2;

struct RunResult {
  int exit_code = exit_ok;
  std::string error;
  std::vector<std::string> files;  // written into the output directory
};

/// Executes one command and writes its report files plus run.json into out_dir.
/// Library errors are caught and reported in the `error` field of the JSON outputs.
RunResult run(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Writes run.json for a run that failed before a configuration was available.
void write_failure(const std::filesystem::path& out_dir, const std::string& error);

}  // namespace fredholm::cli
