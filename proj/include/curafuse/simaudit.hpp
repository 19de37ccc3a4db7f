#pragma once

#include "curafuse/corpus.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace curafuse {

inline constexpr std::size_t kEmbeddingDim = 768;

/// A 768-component finite embedding.
class Embedding {
public:
  Embedding() : values_(kEmbeddingDim, 0.0f) {}
  /// Throws std::invalid_argument on wrong length or non-finite components.
  explicit Embedding(std::vector<float> values);

  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

private:
  std::vector<float> values_;
};

double dot(const Embedding& a, const Embedding& b) noexcept;
double cosine_similarity(const Embedding& a, const Embedding& b) noexcept;

/// Deterministic feature-hashed stand-in for a backbone embedding: one signed feature per
/// dHash bit (position and value) and one per case-folded text token. A post with neither
/// an image nor tokens maps to the zero vector.
Embedding stub_embed(const Post& post, std::uint64_t seed = 0);

/// Flat little-endian float32 records, 768 per record.
std::vector<Embedding> read_embeddings(const std::filesystem::path& path);
std::string encode_embeddings(std::span<const Embedding> records);

struct IndexParams {
  std::size_t tables = 8;
  std::size_t bits = 16;  // 1..64
  std::uint64_t seed = 0;
};

/// (table id, bucket key) element of a signature.
struct Token {
  std::uint32_t table = 0;
  std::uint64_t key = 0;
  friend auto operator<=>(const Token&, const Token&) = default;
};

/// One bucket key per table.
struct Signature {
  std::vector<std::uint64_t> keys;

  std::vector<Token> tokens() const;
  friend bool operator==(const Signature&, const Signature&) = default;
};

/// |a ∩ b| / |a ∪ b| over token sets (inputs need not be sorted); 1.0 when both are empty.
double jaccard(std::span<const Token> a, std::span<const Token> b);
double jaccard(const Signature& a, const Signature& b);

/// L x B seeded unit-norm Gaussian hyperplanes in 768-d.
class Hyperplanes {
public:
  explicit Hyperplanes(const IndexParams& params);

  /// bit j of table t is 1 iff dot(v, plane[t][j]) >= 0; bit j is (key >> j) & 1.
  Signature signature(const Embedding& v) const;

  const IndexParams& params() const noexcept { return params_; }
  std::span<const double> plane(std::size_t table, std::size_t bit) const noexcept {
    return {planes_.data() + (table * params_.bits + bit) * kEmbeddingDim, kEmbeddingDim};
  }

private:
  IndexParams params_;
  std::vector<double> planes_;
};

Signature signature(const Embedding& v, const Hyperplanes& planes);

struct Neighbor {
  std::string id;
  double score = 0.0;
};

struct IndexItem {
  std::string id;
  Embedding embedding;
  std::optional<Label> label;
};

/// Immutable multi-table signature index.
class SimIndex {
public:
  /// Throws std::invalid_argument on duplicate or empty ids.
  SimIndex(std::vector<IndexItem> items, const IndexParams& params);

  std::size_t size() const noexcept { return ids_.size(); }
  const IndexParams& params() const noexcept { return planes_.params(); }
  const Signature& signature_of(const std::string& id) const;
  std::optional<Label> label_of(const std::string& id) const;
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  /// Items sharing at least one bucket with the query, ranked by signature Jaccard
  /// descending then id ascending, backfilled from the whole index in the same order
  /// when fewer than k. Excludes the query. Throws std::out_of_range for an unknown id
  /// and std::invalid_argument when the index has k or fewer entries.
  std::vector<Neighbor> query_similar(const std::string& id, std::size_t k = 5) const;

private:
  std::size_t position(const std::string& id) const;

  Hyperplanes planes_;
  std::vector<std::string> ids_;
  std::vector<std::optional<Label>> labels_;
  std::vector<Signature> signatures_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> buckets_;
};

/// True iff at least `min_disagree` neighbour labels differ from the query label.
bool flag_rule(Label query, std::span<const Label> neighbors, std::size_t min_disagree = 3) noexcept;

struct FlaggedItem {
  std::string id;
  Label label;
  std::vector<Neighbor> neighbors;
  std::vector<Label> neighbor_labels;
};

struct FlagReport {
  std::vector<FlaggedItem> flagged;
  std::size_t examined = 0;

  std::string to_json() const;
};

/// Runs query_similar for every item (in index order) and applies flag_rule.
/// Throws std::invalid_argument if any item is unlabeled.
FlagReport audit_labels(const SimIndex& index, std::size_t k = 5, std::size_t min_disagree = 3);

/// Removes posts whose id is listed; the explicit output of a manual review.
Dataset apply_removals(const Dataset& d, std::span<const std::string> ids);

}  // namespace curafuse
