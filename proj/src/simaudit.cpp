#include "curafuse/simaudit.hpp"

#include "curafuse/dedup.hpp"
#include "curafuse/io.hpp"
#include "curafuse/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace curafuse {

Embedding::Embedding(std::vector<float> values) : values_(std::move(values)) {
  if (values_.size() != kEmbeddingDim)
    throw std::invalid_argument("embedding must have 768 components, got " +
                                std::to_string(values_.size()));
  for (float v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("embedding has a non-finite component");
}

double dot(const Embedding& a, const Embedding& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i)
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

double cosine_similarity(const Embedding& a, const Embedding& b) noexcept {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

namespace {

void add_feature(std::vector<float>& v, std::uint64_t seed, std::uint64_t feature) {
  const std::uint64_t h = derive_seed(seed, {feature});
  const std::size_t slot = static_cast<std::size_t>(h % kEmbeddingDim);
  v[slot] += (h >> 63) ? 1.0f : -1.0f;
}

}  // namespace

Embedding stub_embed(const Post& post, std::uint64_t seed) {
  std::vector<float> v(kEmbeddingDim, 0.0f);
  if (post.image) {
    try {
      const ImageHash h = dhash(decode_image(*post.image));
      for (std::uint64_t bit = 0; bit < 64; ++bit) {
        const std::uint64_t value = (h.bits >> (63 - bit)) & 1u;
        add_feature(v, seed, fnv1a64("img") ^ (bit << 1 | value));
      }
    } catch (const ImageDecodeError&) {
      // no image features
    }
  }
  const std::string text = case_fold(sanitize_text(post.text));
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(' ', start);
    if (end == std::string::npos) end = text.size();
    add_feature(v, seed, fnv1a64(std::string_view(text).substr(start, end - start), fnv1a64("tok")));
    start = end + 1;
  }
  return Embedding(std::move(v));
}

std::vector<Embedding> read_embeddings(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  constexpr std::size_t kRecord = kEmbeddingDim * 4;
  if (bytes.size() % kRecord != 0)
    throw DataError("embedding file size is not a multiple of 768 float32 values: " + path.string());
  std::vector<Embedding> out;
  out.reserve(bytes.size() / kRecord);
  for (std::size_t off = 0; off < bytes.size(); off += kRecord) {
    std::vector<float> vals(kEmbeddingDim);
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + off + 4 * i);
      const std::uint32_t u = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
                              std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
      vals[i] = std::bit_cast<float>(u);
    }
    try {
      out.emplace_back(std::move(vals));
    } catch (const std::invalid_argument& e) {
      throw DataError("embedding record " + std::to_string(out.size()) + ": " + e.what());
    }
  }
  return out;
}

std::string encode_embeddings(std::span<const Embedding> records) {
  std::string out;
  out.reserve(records.size() * kEmbeddingDim * 4);
  for (const Embedding& e : records) {
    for (float f : e.values()) {
      const auto u = std::bit_cast<std::uint32_t>(f);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
    }
  }
  return out;
}

std::vector<Token> Signature::tokens() const {
  std::vector<Token> out;
  out.reserve(keys.size());
  for (std::size_t t = 0; t < keys.size(); ++t) out.push_back({static_cast<std::uint32_t>(t), keys[t]});
  return out;
}

double jaccard(std::span<const Token> a, std::span<const Token> b) {
  std::vector<Token> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0, i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] < sb[j]) {
      ++i;
    } else if (sb[j] < sa[i]) {
      ++j;
    } else {
      ++inter, ++i, ++j;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard(const Signature& a, const Signature& b) {
  // Tokens are tagged by table, so they can only coincide table-by-table.
  if (a.keys.size() != b.keys.size()) return jaccard(a.tokens(), b.tokens());
  if (a.keys.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t t = 0; t < a.keys.size(); ++t) same += a.keys[t] == b.keys[t];
  return static_cast<double>(same) / static_cast<double>(2 * a.keys.size() - same);
}

Hyperplanes::Hyperplanes(const IndexParams& params) : params_(params) {
  if (params.tables == 0) throw std::invalid_argument("index needs at least one table");
  if (params.bits == 0 || params.bits > 64) throw std::invalid_argument("bits per table must be in 1..64");
  planes_.resize(params.tables * params.bits * kEmbeddingDim);
  CounterRng rng(derive_seed(params.seed, {fnv1a64("hyperplanes"), params.tables, params.bits}));
  for (std::size_t p = 0; p < params.tables * params.bits; ++p) {
    double* row = planes_.data() + p * kEmbeddingDim;
    double norm = 0.0;
    for (std::size_t d = 0; d < kEmbeddingDim; ++d) {
      row[d] = rng.normal();
      norm += row[d] * row[d];
    }
    norm = std::sqrt(norm);
    for (std::size_t d = 0; d < kEmbeddingDim; ++d) row[d] /= norm;
  }
}

Signature Hyperplanes::signature(const Embedding& v) const {
  Signature sig;
  sig.keys.resize(params_.tables);
  for (std::size_t t = 0; t < params_.tables; ++t) {
    std::uint64_t key = 0;
    for (std::size_t j = 0; j < params_.bits; ++j) {
      const auto w = plane(t, j);
      double s = 0.0;
      for (std::size_t d = 0; d < kEmbeddingDim; ++d) s += w[d] * static_cast<double>(v[d]);
      if (s >= 0.0) key |= std::uint64_t{1} << j;
    }
    sig.keys[t] = key;
  }
  return sig;
}

Signature signature(const Embedding& v, const Hyperplanes& planes) { return planes.signature(v); }

SimIndex::SimIndex(std::vector<IndexItem> items, const IndexParams& params) : planes_(params) {
  const std::size_t n = items.size();
  ids_.reserve(n);
  labels_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (items[i].id.empty()) throw std::invalid_argument("index item with empty id");
    if (!by_id_.emplace(items[i].id, i).second)
      throw std::invalid_argument("duplicate index id: " + items[i].id);
    ids_.push_back(items[i].id);
    labels_.push_back(items[i].label);
  }
  signatures_.resize(n);
  parallel_for(n, [&](std::size_t i) { signatures_[i] = planes_.signature(items[i].embedding); });
  buckets_.resize(params.tables);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < params.tables; ++t) buckets_[t][signatures_[i].keys[t]].push_back(i);
}

std::size_t SimIndex::position(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw std::out_of_range("unknown item id: " + id);
  return it->second;
}

const Signature& SimIndex::signature_of(const std::string& id) const {
  return signatures_[position(id)];
}

std::optional<Label> SimIndex::label_of(const std::string& id) const { return labels_[position(id)]; }

std::vector<Neighbor> SimIndex::query_similar(const std::string& id, std::size_t k) const {
  const std::size_t q = position(id);
  if (size() <= k)
    throw std::invalid_argument("index must hold more than k=" + std::to_string(k) + " items");

  std::unordered_map<std::size_t, std::size_t> shared;
  for (std::size_t t = 0; t < buckets_.size(); ++t) {
    const auto it = buckets_[t].find(signatures_[q].keys[t]);
    if (it == buckets_[t].end()) continue;
    for (std::size_t i : it->second)
      if (i != q) ++shared[i];
  }

  struct Ranked {
    double score;
    std::size_t pos;
  };
  auto better = [&](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return ids_[a.pos] < ids_[b.pos];
  };

  std::vector<Ranked> ranked;
  ranked.reserve(shared.size());
  for (const auto& [pos, count] : shared)
    ranked.push_back({jaccard(signatures_[q], signatures_[pos]), pos});
  std::sort(ranked.begin(), ranked.end(), better);

  if (ranked.size() < k) {
    std::vector<Ranked> rest;
    rest.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
      if (i != q && !shared.contains(i)) rest.push_back({jaccard(signatures_[q], signatures_[i]), i});
    const std::size_t need = k - ranked.size();
    std::partial_sort(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need), rest.end(), better);
    ranked.insert(ranked.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need));
  }
  ranked.resize(k);

  std::vector<Neighbor> out;
  out.reserve(k);
  for (const Ranked& r : ranked) out.push_back({ids_[r.pos], r.score});
  return out;
}

bool flag_rule(Label query, std::span<const Label> neighbors, std::size_t min_disagree) noexcept {
  const auto disagree = static_cast<std::size_t>(
      std::count_if(neighbors.begin(), neighbors.end(), [&](Label l) { return l != query; }));
  return disagree >= min_disagree;
}

std::string FlagReport::to_json() const {
  nlohmann::ordered_json j;
  j["examined"] = examined;
  j["flagged_count"] = flagged.size();
  auto arr = nlohmann::ordered_json::array();
  for (const FlaggedItem& f : flagged) {
    nlohmann::ordered_json item;
    item["id"] = f.id;
    item["label"] = std::string(label_name(f.label));
    auto ns = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < f.neighbors.size(); ++i) {
      nlohmann::ordered_json n;
      n["id"] = f.neighbors[i].id;
      n["label"] = std::string(label_name(f.neighbor_labels[i]));
      n["jaccard"] = f.neighbors[i].score;
      ns.push_back(std::move(n));
    }
    item["neighbors"] = std::move(ns);
    arr.push_back(std::move(item));
  }
  j["flagged"] = std::move(arr);
  return j.dump(2);
}

FlagReport audit_labels(const SimIndex& index, std::size_t k, std::size_t min_disagree) {
  for (const std::string& id : index.ids())
    if (!index.label_of(id)) throw std::invalid_argument("audit requires labels; unlabeled item: " + id);

  std::vector<std::optional<FlaggedItem>> slots(index.size());
  parallel_for(index.size(), [&](std::size_t i) {
    const std::string& id = index.ids()[i];
    FlaggedItem item{id, *index.label_of(id), index.query_similar(id, k), {}};
    for (const Neighbor& n : item.neighbors) item.neighbor_labels.push_back(*index.label_of(n.id));
    if (flag_rule(item.label, item.neighbor_labels, min_disagree)) slots[i] = std::move(item);
  });

  FlagReport report;
  report.examined = index.size();
  for (auto& s : slots)
    if (s) report.flagged.push_back(std::move(*s));
  return report;
}

Dataset apply_removals(const Dataset& d, std::span<const std::string> ids) {
  const std::unordered_set<std::string> drop(ids.begin(), ids.end());
  Dataset out;
  out.provenance = d.provenance;
  for (const Post& p : d.posts)
    if (!drop.contains(p.id)) out.posts.push_back(p);
  return out;
}

}  // namespace curafuse
