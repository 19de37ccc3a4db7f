#include "curafuse/prep.hpp"

#include "curafuse/io.hpp"
#include "curafuse/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace curafuse {

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac})
    if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("fractions: every fraction must be positive");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw ConfigError("fractions: must sum to 1.0");
}

SplitSpec SplitSpec::parse_fractions(std::string_view text, std::uint64_t seed) {
  const auto fields = split_csv_line(text);
  if (fields.size() != 3) throw ConfigError("fractions: expected three comma-separated values");
  double v[3];
  for (int i = 0; i < 3; ++i) {
    const std::string& f = fields[i];
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v[i]);
    if (ec != std::errc() || ptr != f.data() + f.size())
      throw ConfigError("fractions: cannot parse '" + f + "'");
  }
  SplitSpec s{v[0], v[1], v[2], seed};
  s.validate();
  return s;
}

std::array<std::size_t, kNumClasses> class_counts(const Dataset& d) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const Post& p : d.posts)
    if (p.label) ++counts[encode_label(*p.label)];
  return counts;
}

namespace {

// Per-class positions, each ordered by a seeded shuffle of the id-sorted members.
std::array<std::vector<std::size_t>, kNumClasses> shuffled_classes(const Dataset& d,
                                                                    std::uint64_t seed,
                                                                    std::uint64_t purpose) {
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < d.posts.size(); ++i) {
    const Post& p = d.posts[i];
    if (!p.label) throw std::invalid_argument("unlabeled post: " + p.id);
    members[encode_label(*p.label)].push_back(i);
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& m = members[c];
    std::sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(d.posts[a].id, a) < std::tie(d.posts[b].id, b);
    });
    CounterRng rng(derive_seed(seed, {purpose, c}));
    seeded_shuffle(std::span<std::size_t>(m), rng);
  }
  return members;
}

std::size_t floor_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

}  // namespace

Dataset balance(const Dataset& d, std::uint64_t seed) {
  auto members = shuffled_classes(d, seed, fnv1a64("balance"));
  std::size_t m = members[0].size();
  for (const auto& cls : members) m = std::min(m, cls.size());
  if (m == 0) throw std::invalid_argument("cannot balance: at least one class is empty");

  std::vector<bool> keep(d.posts.size(), false);
  for (const auto& cls : members)
    for (std::size_t i = 0; i < m; ++i) keep[cls[i]] = true;

  Dataset out;
  out.provenance = d.provenance;
  out.posts.reserve(3 * m);
  for (std::size_t i = 0; i < d.posts.size(); ++i)
    if (keep[i]) out.posts.push_back(d.posts[i]);
  return out;
}

Splits split(const Dataset& d, const SplitSpec& spec) {
  spec.validate();
  if (d.posts.size() < 5) throw std::invalid_argument("split needs at least 5 posts");
  auto members = shuffled_classes(d, spec.seed, fnv1a64("split"));

  enum Part : std::uint8_t { kTrain, kVal, kTest };
  std::vector<Part> part(d.posts.size(), kTest);
  for (const auto& cls : members) {
    const std::size_t n = cls.size();
    const std::size_t cut1 = floor_count(spec.train_frac, n);
    const std::size_t cut2 = std::max(cut1, floor_count(spec.train_frac + spec.val_frac, n));
    for (std::size_t i = 0; i < n; ++i) part[cls[i]] = i < cut1 ? kTrain : (i < cut2 ? kVal : kTest);
  }

  Splits s;
  s.train.provenance = s.val.provenance = s.test.provenance = d.provenance;
  for (std::size_t i = 0; i < d.posts.size(); ++i) {
    Dataset& target = part[i] == kTrain ? s.train : (part[i] == kVal ? s.val : s.test);
    target.posts.push_back(d.posts[i]);
  }
  return s;
}

std::string split_membership_csv(const Splits& s) {
  std::string out = "id,split\n";
  for (const auto& [name, part] : {std::pair<const char*, const Dataset*>{"train", &s.train},
                                   {"val", &s.val},
                                   {"test", &s.test}})
    for (const Post& p : part->posts) out += p.id + "," + name + "\n";
  return out;
}

}  // namespace curafuse
