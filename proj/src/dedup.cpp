#include "curafuse/dedup.hpp"

#include "curafuse/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace curafuse {
namespace {

constexpr std::size_t kCols = 9;
constexpr std::size_t kRows = 8;

// Luma scaled by 1000 so the BT.601 weights are exact integers.
std::int64_t luma_milli(const Raster& img, std::size_t x, std::size_t y) {
  if (img.channels < 3) return 1000 * static_cast<std::int64_t>(img.at(x, y, 0));
  return 299 * static_cast<std::int64_t>(img.at(x, y, 0)) +
         587 * static_cast<std::int64_t>(img.at(x, y, 1)) +
         114 * static_cast<std::int64_t>(img.at(x, y, 2));
}

// Overlap of [a0, a1) and [b0, b1).
std::int64_t overlap(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
  const std::size_t lo = std::max(a0, b0);
  const std::size_t hi = std::min(a1, b1);
  return hi > lo ? static_cast<std::int64_t>(hi - lo) : 0;
}

}  // namespace

ImageHash dhash(const Raster& img) {
  if (img.empty()) throw std::invalid_argument("dhash: image has no pixels");
  const std::size_t w = img.width;
  const std::size_t h = img.height;

  // Target column j spans [j*w, (j+1)*w) in units of 1/9 source pixel; source pixel x spans
  // [9x, 9x+9). Rows likewise with 8. Every target cell has the same total weight w*h, so
  // comparing weighted sums is the same as comparing area averages, exactly.
  std::vector<std::int64_t> row_sums(h * kCols, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t j = 0; j < kCols; ++j) {
      const std::size_t lo = j * w, hi = (j + 1) * w;
      const std::size_t x0 = lo / kCols;
      const std::size_t x1 = std::min(w, (hi + kCols - 1) / kCols);
      std::int64_t acc = 0;
      for (std::size_t x = x0; x < x1; ++x)
        acc += overlap(lo, hi, kCols * x, kCols * (x + 1)) * luma_milli(img, x, y);
      row_sums[y * kCols + j] = acc;
    }
  }

  std::int64_t cell[kRows][kCols] = {};
  for (std::size_t r = 0; r < kRows; ++r) {
    const std::size_t lo = r * h, hi = (r + 1) * h;
    const std::size_t y0 = lo / kRows;
    const std::size_t y1 = std::min(h, (hi + kRows - 1) / kRows);
    for (std::size_t y = y0; y < y1; ++y) {
      const std::int64_t wy = overlap(lo, hi, kRows * y, kRows * (y + 1));
      for (std::size_t j = 0; j < kCols; ++j) cell[r][j] += wy * row_sums[y * kCols + j];
    }
  }

  std::uint64_t bits = 0;
  for (std::size_t r = 0; r < kRows; ++r)
    for (std::size_t c = 0; c + 1 < kCols; ++c)
      bits = (bits << 1) | (cell[r][c] < cell[r][c + 1] ? 1u : 0u);
  return ImageHash{bits};
}

int max_near_distance(double threshold) noexcept {
  int best = -1;
  for (int d = 0; d <= 64; ++d)
    if (1.0 - static_cast<double>(d) / 64.0 > threshold) best = d;
  return best;
}

std::string DedupReport::to_json() const {
  nlohmann::ordered_json j;
  j["removed_exact_id"] = removed_exact_id;
  j["removed_exact_text"] = removed_exact_text;
  j["removed_near_image"] = removed_near_image;
  j["kept"] = kept;
  return j.dump(2);
}

std::vector<std::optional<ImageHash>> hash_images(const Dataset& d) {
  std::vector<std::optional<ImageHash>> out(d.posts.size());
  parallel_for(d.posts.size(), [&](std::size_t i) {
    const Post& p = d.posts[i];
    if (!p.image) return;
    try {
      out[i] = dhash(decode_image(*p.image));
    } catch (const ImageDecodeError&) {
    } catch (const std::invalid_argument&) {
    }
  });
  return out;
}

namespace {

// Pigeonhole index: if two hashes differ in at most `max_dist` bits and the 64 bits are
// cut into max_dist + 1 chunks, at least one chunk is identical.
class NearHashIndex {
public:
  explicit NearHashIndex(int max_dist) : max_dist_(max_dist) {
    if (max_dist_ >= 0 && max_dist_ + 1 <= 16) {
      const int chunks = max_dist_ + 1;
      for (int i = 0; i <= chunks; ++i) bounds_.push_back(64 * i / chunks);
      tables_.resize(static_cast<std::size_t>(chunks));
    }
  }

  bool has_near(ImageHash h) const {
    if (max_dist_ < 0) return false;
    if (tables_.empty()) {
      return std::any_of(all_.begin(), all_.end(),
                         [&](ImageHash k) { return hamming(h, k) <= max_dist_; });
    }
    for (std::size_t c = 0; c < tables_.size(); ++c) {
      auto it = tables_[c].find(chunk(h, c));
      if (it == tables_[c].end()) continue;
      for (ImageHash k : it->second)
        if (hamming(h, k) <= max_dist_) return true;
    }
    return false;
  }

  void insert(ImageHash h) {
    if (max_dist_ < 0) return;
    if (tables_.empty()) {
      all_.push_back(h);
      return;
    }
    for (std::size_t c = 0; c < tables_.size(); ++c) tables_[c][chunk(h, c)].push_back(h);
  }

private:
  std::uint64_t chunk(ImageHash h, std::size_t c) const {
    const int lo = bounds_[c], hi = bounds_[c + 1];
    const int width = hi - lo;
    const std::uint64_t mask = width >= 64 ? ~0ULL : ((1ULL << width) - 1);
    return (h.bits >> lo) & mask;
  }

  int max_dist_;
  std::vector<int> bounds_;
  std::vector<std::unordered_map<std::uint64_t, std::vector<ImageHash>>> tables_;
  std::vector<ImageHash> all_;
};

}  // namespace

DedupResult remove_duplicates(const Dataset& d,
                              const std::vector<std::optional<ImageHash>>& hashes,
                              double threshold) {
  if (hashes.size() != d.posts.size())
    throw std::invalid_argument("remove_duplicates: hash count does not match dataset");
  DedupResult result;
  result.dataset.provenance = d.provenance;
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> texts;
  NearHashIndex near(max_near_distance(threshold));

  for (std::size_t i = 0; i < d.posts.size(); ++i) {
    const Post& p = d.posts[i];
    if (ids.contains(p.id)) {
      ++result.report.removed_exact_id;
      continue;
    }
    std::string key = case_fold(sanitize_text(p.text));
    if (!key.empty() && texts.contains(key)) {
      ++result.report.removed_exact_text;
      continue;
    }
    if (hashes[i] && near.has_near(*hashes[i])) {
      ++result.report.removed_near_image;
      continue;
    }
    ids.insert(p.id);
    if (!key.empty()) texts.insert(std::move(key));
    if (hashes[i]) near.insert(*hashes[i]);
    result.dataset.posts.push_back(p);
  }
  result.report.kept = result.dataset.posts.size();
  return result;
}

DedupResult remove_duplicates(const Dataset& d, double threshold) {
  return remove_duplicates(d, hash_images(d), threshold);
}

}  // namespace curafuse
