#pragma once

#include "curafuse/corpus.hpp"
#include "curafuse/dedup.hpp"
#include "curafuse/fusion.hpp"
#include "curafuse/rng.hpp"
#include "curafuse/simaudit.hpp"
#include "curafuse/trend.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace curafuse::testing {

Timestamp ts(int year, unsigned month, unsigned day, unsigned hour = 12);

Post make_post(std::string id, std::string text, std::optional<ImageRef> image = std::nullopt,
               std::optional<Label> label = std::nullopt, std::string source = "fixture",
               Timestamp at = ts(2020, 1, 1));

// A gray raster whose dHash is exactly `bits`: 9x8 cells, each scale x scale pixels.
Raster raster_for_hash(std::uint64_t bits, std::size_t scale = 1);
std::vector<std::uint8_t> png_for_hash(std::uint64_t bits, std::size_t scale = 1);

// Flips k distinct random bits.
std::uint64_t flip_bits(std::uint64_t bits, int k, CounterRng& rng);

Raster random_raster(std::size_t width, std::size_t height, std::size_t channels, std::uint64_t seed);

struct DedupFixture {
  Dataset data;
  std::size_t planted_id = 0;
  std::size_t planted_text = 0;
  std::size_t planted_near = 0;  // 0..3 flipped bits: removed at 0.95
  std::size_t planted_far = 0;   // 4..6 flipped bits: kept at 0.95
};

// n posts with in-memory PNG images and planted exact-id, exact-text and near-image copies.
DedupFixture dedup_fixture(std::size_t n, std::uint64_t seed);

Embedding random_gaussian(CounterRng& rng);
// Unit vector at exactly the given cosine to `base` (up to float rounding).
Embedding planted_neighbor(const Embedding& base, double cosine, CounterRng& rng);

struct RecallFixture {
  std::vector<IndexItem> items;
  std::vector<std::size_t> partner;  // planted neighbour of item i
};

// n_pairs base vectors each with one planted neighbour, cosine uniform in [cos_lo, cos_hi].
RecallFixture recall_fixture(std::size_t n_pairs, double cos_lo, double cos_hi, std::uint64_t seed);

struct FusionFixture {
  std::vector<FusionSample> train;
  std::vector<FusionSample> val;
  std::vector<FusionSample> test;
};

// Gaussian score clusters, both modalities informative.
FusionFixture separable_fixture(std::uint64_t seed, std::size_t per_class = 300);
// Text scores are pure noise; image scores informative.
FusionFixture noise_text_fixture(std::uint64_t seed, std::size_t per_class = 300);
// Text separates class 0 from {1, 2}; image separates class 2 from {0, 1}.
FusionFixture complementary_fixture(std::uint64_t seed, std::size_t per_class = 300);

// Replaces one modality's scores by zeros (the constant-encoder ablation).
std::vector<FusionSample> ablate(std::vector<FusionSample> samples, Modality m);

double accuracy(const FusionHead& head, const std::vector<FusionSample>& samples);

// Writes posts JSONL plus text/image score CSVs for a fusion fixture split.
// Every post gets text and a shared image file so it also passes predict().
struct FusionFiles {
  std::filesystem::path posts;
  std::filesystem::path text_scores;
  std::filesystem::path image_scores;
};
FusionFiles write_fusion_split(const std::filesystem::path& dir, const std::string& name,
                               const std::vector<FusionSample>& samples);

// 112 months from 2014-01: abundance falls until 2018-01, then rises.
MonthlySeries two_segment_series(std::uint64_t examined = 1000);
// Classified posts reproducing a series exactly (examined posts per month).
std::vector<ClassifiedPost> expand_series(const MonthlySeries& s);

// Labeled, unbalanced raw export with image files, planted duplicates and two sources.
void write_raw_corpus(const std::filesystem::path& dir, std::uint64_t seed);

struct PipelineRun {
  int status = 0;             // first non-zero exit code, or 0
  std::string failed_step;
  std::map<std::string, std::string> digests;  // relative path -> sha256 of every file produced
  std::string log;
};
// Runs ingest, dedupe, audit (+ removal of flagged ids), balance, split, train, eval,
// classify and trend through the CLI entry point, with relative paths inside `dir`.
PipelineRun run_full_pipeline(const std::filesystem::path& dir, std::uint64_t seed);
// Deletes everything but raw.jsonl and img/ so the pipeline can be replayed in place.
void clear_pipeline_outputs(const std::filesystem::path& dir);

// Creates a fresh empty directory under the system temp dir.
std::filesystem::path fresh_dir(const std::string& tag);

}  // namespace curafuse::testing
