#pragma once

#include "curafuse/image.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace curafuse {

enum class Label : std::uint8_t { ProED = 0, Neutral = 1, ProRecovery = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr Label kAllLabels[kNumClasses] = {Label::ProED, Label::Neutral,
                                                   Label::ProRecovery};

/// ProED -> 0, Neutral -> 1, ProRecovery -> 2.
constexpr int encode_label(Label l) noexcept { return static_cast<int>(l); }

/// Inverse of encode_label; throws std::invalid_argument outside {0,1,2}.
Label decode_label(int code);

/// JSON wire names: "pro_ed", "neutral", "pro_recovery".
std::string_view label_name(Label l) noexcept;
std::optional<Label> parse_label_name(std::string_view name) noexcept;

using Timestamp = std::chrono::sys_seconds;

/// Accepts "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)" ('t'/' ' separator and 'z'
/// also accepted). Fractional seconds are truncated. Years outside [1970, 2100) rejected.
std::optional<Timestamp> parse_rfc3339(std::string_view text) noexcept;
/// Canonical UTC form "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp t);

struct Post {
  std::string id;
  Timestamp posted_at{};
  std::string source;
  std::string text;
  std::optional<ImageRef> image;
  std::optional<Label> label;
};

struct Dataset {
  std::vector<Post> posts;
  std::string provenance;

  std::size_t size() const noexcept { return posts.size(); }
};

struct LoadResult {
  Dataset dataset;
  std::size_t skipped = 0;  // malformed lines
};

/// Reads JSON-Lines posts. Blank lines are ignored; malformed lines are skipped and
/// counted. Relative image paths resolve against the file's directory.
/// Throws DataError if the file cannot be read.
LoadResult load_posts(const std::filesystem::path& path);
LoadResult parse_posts_jsonl(std::string_view contents,
                             const std::filesystem::path& base_dir = {});

/// One JSON object per line in the ingestion schema. In-memory images serialize as
/// null image_path.
std::string to_jsonl(const Dataset& d);

/// Drops URL, @-mention and #-hashtag tokens; collapses whitespace; trims.
std::string sanitize_text(std::string_view raw);

/// ASCII case folding used for duplicate-text comparison.
std::string case_fold(std::string_view s);

struct FilterResult {
  Dataset dataset;
  std::size_t missing_text = 0;
  std::size_t missing_image = 0;
  std::size_t undecodable_image = 0;
};

/// Keeps posts with non-empty sanitized text and a decodable image, in order.
FilterResult filter_multimodal(const Dataset& d);

/// Returns a copy of `d` with every post's text sanitized.
Dataset sanitize_dataset(const Dataset& d);

}  // namespace curafuse
