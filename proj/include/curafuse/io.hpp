#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace curafuse {

/// Invalid configuration or arguments (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

/// Splits one CSV line on commas. No quoting support; fields never contain commas.
std::vector<std::string> split_csv_line(std::string_view line);

/// Shortest round-trip decimal form of a double ("%.17g" trimmed).
std::string format_double(double v);

/// Runs body(i) for i in [0, n) on up to hardware_concurrency threads.
/// Each index is written by exactly one thread; order of completion is not observable
/// through the results as long as body only writes slot i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace curafuse
