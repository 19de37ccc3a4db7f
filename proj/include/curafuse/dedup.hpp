#pragma once

#include "curafuse/corpus.hpp"
#include "curafuse/image.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace curafuse {

/// 64-bit difference hash of an image.
struct ImageHash {
  std::uint64_t bits = 0;
  friend bool operator==(ImageHash, ImageHash) = default;
};

/// dHash: BT.601 luma, area-average resize to 9x8, bit(r, c) = luma[r][c] < luma[r][c+1],
/// packed row-major with bit (0, 0) in the MSB. Throws std::invalid_argument on an empty raster.
ImageHash dhash(const Raster& img);

inline int hamming(ImageHash a, ImageHash b) noexcept { return std::popcount(a.bits ^ b.bits); }

/// 1 - hamming(a, b) / 64.
inline double hash_similarity(ImageHash a, ImageHash b) noexcept {
  return 1.0 - static_cast<double>(hamming(a, b)) / 64.0;
}

/// Largest Hamming distance whose similarity is strictly above `threshold`, or -1 if none.
int max_near_distance(double threshold) noexcept;

struct DedupReport {
  std::size_t removed_exact_id = 0;
  std::size_t removed_exact_text = 0;
  std::size_t removed_near_image = 0;
  std::size_t kept = 0;

  std::size_t total() const noexcept {
    return kept + removed_exact_id + removed_exact_text + removed_near_image;
  }
  std::string to_json() const;
  friend bool operator==(const DedupReport&, const DedupReport&) = default;
};

struct DedupResult {
  Dataset dataset;
  DedupReport report;
};

/// Hashes every post image (in parallel); nullopt where the post has no decodable image.
std::vector<std::optional<ImageHash>> hash_images(const Dataset& d);

/// Sequential sweep in dataset order. A post is removed if an earlier kept post shares its
/// id, its case-folded sanitized text (non-empty), or has image similarity > threshold.
/// Each removal is attributed to the first rule that matches, in that order.
DedupResult remove_duplicates(const Dataset& d, double threshold = 0.95);
DedupResult remove_duplicates(const Dataset& d,
                              const std::vector<std::optional<ImageHash>>& hashes,
                              double threshold = 0.95);

}  // namespace curafuse
