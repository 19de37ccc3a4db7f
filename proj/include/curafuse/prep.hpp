#pragma once

#include "curafuse/corpus.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace curafuse {

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless all fractions are positive and sum to 1 (within 1e-9).
  void validate() const;
  /// Parses "0.6,0.2,0.2".
  static SplitSpec parse_fractions(std::string_view text, std::uint64_t seed);
};

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

std::array<std::size_t, kNumClasses> class_counts(const Dataset& d);

/// Undersamples every class to the minority count m without replacement, so the result
/// has 3m posts in input order. Selection depends only on (ids, labels, seed), never on
/// input order. Throws std::invalid_argument on an unlabeled post or an empty class.
Dataset balance(const Dataset& d, std::uint64_t seed);

/// Stratified split: within each class, ids are sorted and shuffled with the seed, then
/// cut at floor(train*n) and floor((train+val)*n). Each part keeps input order.
/// Throws std::invalid_argument if the dataset has fewer than 5 posts or unlabeled posts.
Splits split(const Dataset& d, const SplitSpec& spec);

/// "id,split" rows for every post in the three parts.
std::string split_membership_csv(const Splits& s);

}  // namespace curafuse
