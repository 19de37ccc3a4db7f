#pragma once

#include "curafuse/fusion.hpp"
#include "curafuse/prep.hpp"
#include "curafuse/simaudit.hpp"
#include "curafuse/trend.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace curafuse {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;

/// Everything a subcommand needs. Paths are keyed by role ("input", "out", "report", ...).
struct PipelineConfig {
  std::string command;
  std::map<std::string, std::filesystem::path> inputs;
  std::map<std::string, std::filesystem::path> outputs;
  std::uint64_t seed = 0;

  double near_threshold = 0.95;
  IndexParams audit_index{};
  std::size_t audit_k = 5;
  std::size_t flag_min_disagree = 3;
  SplitSpec fractions{};
  TrainConfig train{};
  MonthKey trend_from{2018, 1};
  std::size_t trend_degree = 3;
  std::optional<MonthKey> schedule_first;
  std::optional<MonthKey> schedule_last;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// JSON manifest: tool, version, command, config (every field except seed), seed,
/// input SHA-256 digests, output paths and a creation timestamp. The timestamp honours
/// SOURCE_DATE_EPOCH when set.
std::string emit_run_manifest(const PipelineConfig& cfg);

/// Runs one subcommand. Returns 0 on success, 1 on a configuration error, 2 on a data error.
int run(const PipelineConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv-style arguments (without the program name) and runs the subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace curafuse
