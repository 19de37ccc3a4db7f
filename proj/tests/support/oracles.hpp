#pragma once

// Second implementations written without reference to the library code paths.

#include "curafuse/corpus.hpp"
#include "curafuse/image.hpp"
#include "curafuse/simaudit.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace curafuse::testing {

std::string sanitize_oracle(const std::string& raw);

// Replicates every pixel 9x across and 8x down, then sums W x H blocks of exact integer luma.
std::uint64_t dhash_oracle(const Raster& img);

struct DedupOracle {
  std::vector<std::size_t> kept;  // indices into the input
  std::size_t by_id = 0;
  std::size_t by_text = 0;
  std::size_t by_image = 0;
};
// Pairwise scan against every earlier kept post.
DedupOracle dedup_oracle(const Dataset& d, double threshold);

// Index of the highest-cosine other vector (long double accumulation).
std::size_t nearest_by_cosine(std::span<const Embedding> vs, std::size_t i);
long double cosine_oracle(const Embedding& a, const Embedding& b);

// Bucket keys recomputed from the raw hyperplanes with an independent dot loop.
std::vector<std::uint64_t> signature_oracle(const Embedding& v, const Hyperplanes& planes);

struct TallyMetrics {
  std::array<std::array<std::uint64_t, 3>, 3> counts{};
  double accuracy = 0.0;
  std::array<double, 3> precision{}, recall{}, f1{};
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
};
TallyMetrics tally_metrics(std::span<const int> preds, std::span<const int> truth);

// Areas by recomputing every operating point from scratch at each distinct threshold.
struct EnumeratedAreas {
  bool defined = false;
  double roc = 0.0;
  double pr = 0.0;
};
EnumeratedAreas enumerate_areas(std::span<const double> scores, std::span<const int> positive);
// P(score_pos > score_neg) + P(equal) / 2.
double mann_whitney_auc(std::span<const double> scores, std::span<const int> positive);

// Least squares via normal equations on centered, scaled x in long double; returns
// coefficients in original x units (ascending powers).
std::vector<double> normal_equations_fit(std::span<const double> xs, std::span<const double> ys, std::size_t degree);

// Every (a, b, c) in [1, days] with b - a >= 2 and c - b >= 2.
std::vector<std::array<unsigned, 3>> enumerate_schedules(unsigned days);

// One-sample Kolmogorov-Smirnov statistic against U(0, 1).
double ks_uniform(std::vector<double> sample);

}  // namespace curafuse::testing
