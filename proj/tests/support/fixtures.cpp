#include "fixtures.hpp"

#include "curafuse/cli.hpp"
#include "curafuse/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unistd.h>

namespace curafuse::testing {

namespace fs = std::filesystem;

Timestamp ts(int year, unsigned month, unsigned day, unsigned hour) {
  using namespace std::chrono;
  return sys_days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}} + hours{hour};
}

Post make_post(std::string id, std::string text, std::optional<ImageRef> image, std::optional<Label> label,
               std::string source, Timestamp at) {
  Post p;
  p.id = std::move(id);
  p.posted_at = at;
  p.source = std::move(source);
  p.text = std::move(text);
  p.image = std::move(image);
  p.label = label;
  return p;
}

Raster raster_for_hash(std::uint64_t bits, std::size_t scale) {
  Raster img(9 * scale, 8 * scale, 1);
  for (std::size_t r = 0; r < 8; ++r) {
    int v = 100;
    for (std::size_t c = 0; c < 9; ++c) {
      for (std::size_t y = 0; y < scale; ++y)
        for (std::size_t x = 0; x < scale; ++x) img.at(c * scale + x, r * scale + y, 0) = static_cast<std::uint8_t>(v);
      if (c == 8) break;
      const bool up = (bits >> (63 - (r * 8 + c))) & 1u;
      v += up ? 10 : -10;
    }
  }
  return img;
}

std::vector<std::uint8_t> png_for_hash(std::uint64_t bits, std::size_t scale) {
  return encode_png(raster_for_hash(bits, scale));
}

std::uint64_t flip_bits(std::uint64_t bits, int k, CounterRng& rng) {
  std::vector<unsigned> pos(64);
  std::iota(pos.begin(), pos.end(), 0u);
  seeded_shuffle(std::span<unsigned>(pos), rng);
  for (int i = 0; i < k; ++i) bits ^= 1ULL << pos[static_cast<std::size_t>(i)];
  return bits;
}

Raster random_raster(std::size_t width, std::size_t height, std::size_t channels, std::uint64_t seed) {
  Raster img(width, height, channels);
  CounterRng rng(seed);
  for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

DedupFixture dedup_fixture(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  DedupFixture f;
  struct Base {
    std::string id;
    std::string text;
    std::uint64_t hash;
  };
  std::vector<Base> bases;
  std::size_t serial = 0;
  auto fresh_text = [&] { return "post " + std::to_string(serial) + " token" + std::to_string(rng.below(1000)); };
  auto add = [&](std::string id, std::string text, std::uint64_t hash) {
    f.data.posts.push_back(make_post(std::move(id), std::move(text), ImageRef{png_for_hash(hash, 2)}));
  };

  while (f.data.size() < n) {
    ++serial;
    const std::uint64_t roll = bases.size() < 10 ? 0 : rng.below(100);
    if (roll < 50) {
      Base b{"p" + std::to_string(serial), fresh_text(), rng.next()};
      add(b.id, b.text, b.hash);
      bases.push_back(std::move(b));
      continue;
    }
    const Base& b = bases[rng.below(bases.size())];
    if (roll < 60) {
      add(b.id, fresh_text(), rng.next());
      ++f.planted_id;
    } else if (roll < 70) {
      std::string shouted = b.text;
      std::transform(shouted.begin(), shouted.end(), shouted.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      add("p" + std::to_string(serial), "  " + shouted + " #dup @someone https://t.co/x ", rng.next());
      ++f.planted_text;
    } else if (roll < 85) {
      add("p" + std::to_string(serial), fresh_text(), flip_bits(b.hash, static_cast<int>(rng.below(4)), rng));
      ++f.planted_near;
    } else if (roll < 95) {
      add("p" + std::to_string(serial), fresh_text(), flip_bits(b.hash, 4 + static_cast<int>(rng.below(3)), rng));
      ++f.planted_far;
    } else {
      // text that sanitizes to nothing never counts as a text duplicate
      add("p" + std::to_string(serial), "#only @tags", rng.next());
    }
  }
  return f;
}

Embedding random_gaussian(CounterRng& rng) {
  std::vector<float> v(kEmbeddingDim);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return Embedding(std::move(v));
}

Embedding planted_neighbor(const Embedding& base, double cosine, CounterRng& rng) {
  std::vector<double> u(base.values().begin(), base.values().end());
  const double un = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
  for (auto& x : u) x /= un;
  std::vector<double> w(kEmbeddingDim);
  for (auto& x : w) x = rng.normal();
  const double proj = std::inner_product(w.begin(), w.end(), u.begin(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= proj * u[i];
  const double wn = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
  const double s = std::sqrt(1.0 - cosine * cosine);
  std::vector<float> out(kEmbeddingDim);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(cosine * u[i] + s * w[i] / wn);
  return Embedding(std::move(out));
}

RecallFixture recall_fixture(std::size_t n_pairs, double cos_lo, double cos_hi, std::uint64_t seed) {
  CounterRng rng(seed);
  RecallFixture f;
  char id[32];
  for (std::size_t p = 0; p < n_pairs; ++p) {
    Embedding base = random_gaussian(rng);
    const double c = cos_lo + (cos_hi - cos_lo) * rng.uniform();
    Embedding near = planted_neighbor(base, c, rng);
    std::snprintf(id, sizeof id, "v%05zu", 2 * p);
    f.items.push_back({id, std::move(base), std::nullopt});
    std::snprintf(id, sizeof id, "v%05zu", 2 * p + 1);
    f.items.push_back({id, std::move(near), std::nullopt});
    f.partner.push_back(2 * p + 1);
    f.partner.push_back(2 * p);
  }
  return f;
}

namespace {

using Generator = ScoreVector (*)(int code, CounterRng& rng, bool text);

std::vector<FusionSample> draw(std::size_t per_class, CounterRng& rng, Generator gen) {
  std::vector<FusionSample> out;
  for (std::size_t i = 0; i < per_class; ++i)
    for (int c = 0; c < 3; ++c) out.push_back({gen(c, rng, true), gen(c, rng, false), c});
  seeded_shuffle(std::span<FusionSample>(out), rng);
  return out;
}

FusionFixture make(std::uint64_t seed, std::size_t per_class, Generator gen) {
  CounterRng rng(seed);
  FusionFixture f;
  f.train = draw(per_class, rng, gen);
  f.val = draw(per_class / 2, rng, gen);
  f.test = draw(per_class, rng, gen);
  return f;
}

ScoreVector noise(CounterRng& rng) { return {rng.normal(), rng.normal(), rng.normal()}; }

ScoreVector separable(int code, CounterRng& rng, bool) {
  ScoreVector v = noise(rng);
  v[static_cast<std::size_t>(code)] += 3.0;
  return v;
}

ScoreVector noisy_text(int code, CounterRng& rng, bool text) {
  ScoreVector v = noise(rng);
  if (!text) v[static_cast<std::size_t>(code)] += 2.0;
  return v;
}

ScoreVector complementary(int code, CounterRng& rng, bool text) {
  ScoreVector v = noise(rng);
  if (text && code == 0) v[0] += 4.0;
  if (!text && code == 2) v[2] += 4.0;
  return v;
}

}  // namespace

FusionFixture separable_fixture(std::uint64_t seed, std::size_t per_class) { return make(seed, per_class, separable); }
FusionFixture noise_text_fixture(std::uint64_t seed, std::size_t per_class) {
  return make(seed, per_class, noisy_text);
}
FusionFixture complementary_fixture(std::uint64_t seed, std::size_t per_class) {
  return make(seed, per_class, complementary);
}

std::vector<FusionSample> ablate(std::vector<FusionSample> samples, Modality m) {
  for (auto& s : samples) (m == Modality::Text ? s.text : s.image) = ScoreVector{};
  return samples;
}

double accuracy(const FusionHead& head, const std::vector<FusionSample>& samples) {
  std::size_t right = 0;
  for (const auto& s : samples) right += encode_label(predict(s.text, s.image, head).label) == s.code;
  return static_cast<double>(right) / static_cast<double>(samples.size());
}

FusionFiles write_fusion_split(const fs::path& dir, const std::string& name, const std::vector<FusionSample>& samples) {
  const fs::path image = dir / "shared.png";
  if (!fs::exists(image)) {
    const auto bytes = png_for_hash(0x0123456789ABCDEFULL, 2);
    write_file_atomic(image, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  Dataset d;
  std::string text_csv = "id,s0,s1,s2\n", image_csv = "id,s0,s1,s2\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string id = name + "-" + std::to_string(i);
    d.posts.push_back(make_post(id, "sample text " + std::to_string(i), ImageRef{fs::path("shared.png")},
                                decode_label(samples[i].code), "fixture", ts(2020, 1 + i % 12, 1 + i % 28)));
    auto row = [&](const ScoreVector& v) {
      return id + "," + format_double(v[0]) + "," + format_double(v[1]) + "," + format_double(v[2]) + "\n";
    };
    text_csv += row(samples[i].text);
    image_csv += row(samples[i].image);
  }
  FusionFiles f{dir / (name + ".jsonl"), dir / (name + "_text.csv"), dir / (name + "_image.csv")};
  write_file_atomic(f.posts, to_jsonl(d));
  write_file_atomic(f.text_scores, text_csv);
  write_file_atomic(f.image_scores, image_csv);
  return f;
}

MonthlySeries two_segment_series(std::uint64_t examined) {
  MonthlySeries s;
  MonthKey m{2014, 1};
  for (int t = 0; t < 112; ++t, m = m.next()) {
    const double f = t <= 48 ? 60.0 - 0.5 * t : 36.0 + 0.3 * (t - 48);
    const auto pro = static_cast<std::uint64_t>(std::llround(static_cast<double>(examined) * f / 100.0));
    s.points.push_back({m, examined, pro, relative_abundance(pro, examined)});
  }
  return s;
}

std::vector<ClassifiedPost> expand_series(const MonthlySeries& s) {
  std::vector<ClassifiedPost> out;
  for (const MonthlyPoint& p : s.points)
    for (std::uint64_t i = 0; i < p.examined; ++i)
      out.push_back({ts(p.month.year, p.month.month, 1 + static_cast<unsigned>(i % 28)),
                     i < p.pro_ed ? Label::ProED : Label::Neutral});
  return out;
}

fs::path fresh_dir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("curafuse-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace curafuse::testing

namespace curafuse::testing {

void write_raw_corpus(const fs::path& dir, std::uint64_t seed) {
  CounterRng rng(seed);
  static const char* vocab[3][6] = {{"skip", "fast", "thin", "goal", "bones", "empty"},
                                    {"coffee", "sunset", "dog", "city", "music", "rain"},
                                    {"healing", "strong", "therapy", "nourish", "progress", "proud"}};
  const std::size_t per_class[3] = {40, 70, 55};
  fs::create_directories(dir / "img");
  std::string jsonl;
  std::vector<std::pair<std::string, std::uint64_t>> earlier;  // (text, hash) for planting copies
  // images cluster by class around a prototype hash, so stub embeddings do too
  const std::uint64_t prototype[3] = {rng.next(), rng.next(), rng.next()};
  std::size_t serial = 0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i, ++serial) {
      // about one post in twenty carries the wrong label
      const int shown = rng.below(20) == 0 ? (c + 1 + static_cast<int>(rng.below(2))) % 3 : c;
      std::string text;
      for (int w = 0; w < 5; ++w) text += std::string(vocab[c][rng.below(6)]) + " ";
      text += "n" + std::to_string(serial) + " #tag" + std::to_string(c) + " https://t.co/" + std::to_string(serial);
      std::uint64_t hash = flip_bits(prototype[c], 8 + static_cast<int>(rng.below(5)), rng);
      if (!earlier.empty() && rng.below(10) == 0) hash = flip_bits(earlier[rng.below(earlier.size())].second, 1, rng);
      if (!earlier.empty() && rng.below(15) == 0) text = earlier[rng.below(earlier.size())].first;
      earlier.push_back({text, hash});
      const std::string img = "img/" + std::to_string(serial) + ".png";
      const auto bytes = png_for_hash(hash, 3);
      write_file_atomic(dir / img, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      const int year = 2016 + static_cast<int>(rng.below(6));
      const unsigned month = 1 + static_cast<unsigned>(rng.below(12));
      nlohmann::ordered_json j;
      j["id"] = "t" + std::to_string(serial);
      j["posted_at"] = format_rfc3339(ts(year, month, 1 + static_cast<unsigned>(rng.below(28))));
      j["source"] = rng.below(2) ? "#alpha" : "#beta";
      j["text"] = text;
      j["image_path"] = rng.below(25) == 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(img);
      j["label"] = std::string(label_name(decode_label(shown)));
      jsonl += j.dump() + "\n";
    }
  }
  jsonl += "{broken line\n";
  write_file_atomic(dir / "raw.jsonl", jsonl);
}

namespace {

struct CwdGuard {
  fs::path saved = fs::current_path();
  explicit CwdGuard(const fs::path& to) { fs::current_path(to); }
  ~CwdGuard() { fs::current_path(saved); }
};

}  // namespace

PipelineRun run_full_pipeline(const fs::path& dir, std::uint64_t seed) {
  const std::string s = std::to_string(seed);
  PipelineRun run;
  const CwdGuard cwd(dir);
  auto step = [&](const std::string& name, std::vector<std::string> args) {
    if (run.status) return;
    std::ostringstream out, err;
    const int rc = run_cli(args, out, err);
    run.log += "$ " + name + "\n" + out.str() + err.str();
    if (rc) {
      run.status = rc;
      run.failed_step = name;
    }
  };
  step("ingest", {"ingest", "--input", "raw.jsonl", "--out", "ingested.jsonl", "--report", "ingest_report.json"});
  step("dedupe", {"dedupe", "--input", "ingested.jsonl", "--out", "deduped.jsonl", "--report", "dedup_report.json"});
  step("audit", {"audit", "--input", "deduped.jsonl", "--report", "flags.json", "--seed", s});
  if (!run.status) {
    // the manual review step: here every flagged post is removed
    const auto flags = nlohmann::json::parse(read_file("flags.json"));
    std::string ids;
    for (const auto& f : flags["flagged"]) ids += f["id"].get<std::string>() + "\n";
    write_file_atomic("removals.txt", ids);
  }
  step("audit-remove", {"audit", "--input", "deduped.jsonl", "--report", "flags_final.json", "--remove",
                        "removals.txt", "--out", "audited.jsonl", "--seed", s});
  step("balance", {"balance", "--input", "audited.jsonl", "--out", "balanced.jsonl", "--seed", s});
  step("split", {"split", "--input", "balanced.jsonl", "--out-dir", "splits", "--seed", s});
  step("train", {"train", "--train", "splits/train.jsonl", "--val", "splits/val.jsonl", "--out", "head.json",
                 "--seed", s, "--epochs", "40"});
  step("eval", {"eval", "--input", "splits/test.jsonl", "--head", "head.json", "--report", "metrics.json", "--roc",
                "roc.csv", "--pr", "pr.csv"});
  step("classify", {"classify", "--input", "deduped.jsonl", "--head", "head.json", "--out", "predictions.csv"});
  step("trend", {"trend", "--input", "predictions.csv", "--series-out", "series.csv", "--fits-out", "fits.csv",
                 "--schedule-from", "2020-01", "--schedule-to", "2020-12", "--schedule-out", "schedule.csv", "--seed",
                 s});
  for (const auto& e : fs::recursive_directory_iterator(".")) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), ".").generic_string();
    if (rel.rfind("img/", 0) == 0) continue;
    run.digests[rel] = sha256_file_hex(e.path());
  }
  return run;
}

}  // namespace curafuse::testing

namespace curafuse::testing {

void clear_pipeline_outputs(const fs::path& dir) {
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename();
    if (name != "raw.jsonl" && name != "img") fs::remove_all(e.path());
  }
}

}  // namespace curafuse::testing
