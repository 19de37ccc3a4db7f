#pragma once

#include "curafuse/corpus.hpp"
#include "curafuse/image.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace curafuse {

/// Per-class logits in label-code order.
using ScoreVector = std::array<double, kNumClasses>;

enum class Modality { Text, Image };

std::string_view modality_name(Modality m) noexcept;

/// Raised when a post lacks the content an encoder needs. what() names the modality.
class MissingModalityError : public std::runtime_error {
public:
  explicit MissingModalityError(Modality m)
      : std::runtime_error("missing modality: " + std::string(modality_name(m))), modality_(m) {}
  Modality modality() const noexcept { return modality_; }

private:
  Modality modality_;
};

/// A frozen per-modality classifier. Implementations must be deterministic and
/// safe to call concurrently.
class ModalityEncoder {
public:
  virtual ~ModalityEncoder() = default;
  virtual Modality modality() const noexcept = 0;
  virtual std::string name() const = 0;
  virtual ScoreVector encode(const Post& post) const = 0;
};

/// Image preprocessing: center crop to a square, area-resample to side x side, then
/// per-channel (x/255 - mean) / std. Output is channel-major (3 x side x side).
struct ImageTransform {
  std::size_t side = 224;
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> stddev{0.229, 0.224, 0.225};

  std::vector<float> apply(const Raster& img) const;
};

/// Whitespace tokens of the case-folded sanitized text, each hashed into [0, vocab_size).
std::vector<std::uint32_t> tokenize(std::string_view text, std::uint32_t vocab_size = 1u << 16);

/// Seeded hashed bag-of-words: logits = sum of per-token-id weight vectors / sqrt(#tokens).
class HashedTextEncoder final : public ModalityEncoder {
public:
  explicit HashedTextEncoder(std::uint64_t seed = 0, std::uint32_t vocab_size = 1u << 16)
      : seed_(seed), vocab_size_(vocab_size) {}
  Modality modality() const noexcept override { return Modality::Text; }
  std::string name() const override { return "hashed-bow"; }
  ScoreVector encode(const Post& post) const override;

private:
  std::uint64_t seed_;
  std::uint32_t vocab_size_;
};

/// Linear map of the +/-1 dHash bits: logits = sum_i sign(bit_i) * u_i / 8.
class DHashImageEncoder final : public ModalityEncoder {
public:
  explicit DHashImageEncoder(std::uint64_t seed = 0);
  Modality modality() const noexcept override { return Modality::Image; }
  std::string name() const override { return "dhash-linear"; }
  ScoreVector encode(const Post& post) const override;

private:
  std::array<ScoreVector, 64> weights_{};
};

/// Scores produced elsewhere (e.g. a real backbone), looked up by post id.
class PrecomputedEncoder final : public ModalityEncoder {
public:
  PrecomputedEncoder(Modality modality, std::unordered_map<std::string, ScoreVector> scores,
                     std::string name = "precomputed")
      : modality_(modality), scores_(std::move(scores)), name_(std::move(name)) {}
  Modality modality() const noexcept override { return modality_; }
  std::string name() const override { return name_; }
  /// Throws MissingModalityError when the id has no row.
  ScoreVector encode(const Post& post) const override;
  std::size_t size() const noexcept { return scores_.size(); }

private:
  Modality modality_;
  std::unordered_map<std::string, ScoreVector> scores_;
  std::string name_;
};

/// Same scores for every post; used to ablate a modality.
class ConstantEncoder final : public ModalityEncoder {
public:
  ConstantEncoder(Modality modality, ScoreVector value = {}) : modality_(modality), value_(value) {}
  Modality modality() const noexcept override { return modality_; }
  std::string name() const override { return "constant"; }
  ScoreVector encode(const Post&) const override { return value_; }

private:
  Modality modality_;
  ScoreVector value_;
};

/// Parses "id,s0,s1,s2" rows; an optional header line starting with "id" is skipped.
/// Throws DataError on a malformed row.
std::unordered_map<std::string, ScoreVector> parse_score_csv(std::string_view contents);
std::unordered_map<std::string, ScoreVector> load_score_csv(const std::filesystem::path& path);

struct EncoderPair {
  const ModalityEncoder& text;
  const ModalityEncoder& image;
};

}  // namespace curafuse
