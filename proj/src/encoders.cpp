#include "curafuse/encoders.hpp"

#include "curafuse/dedup.hpp"
#include "curafuse/io.hpp"
#include "curafuse/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace curafuse {

std::string_view modality_name(Modality m) noexcept {
  return m == Modality::Text ? "text" : "image";
}

std::vector<float> ImageTransform::apply(const Raster& img) const {
  if (img.empty()) throw std::invalid_argument("transform: empty image");
  if (side == 0) throw std::invalid_argument("transform: side must be positive");
  const std::size_t crop = std::min(img.width, img.height);
  const std::size_t x_off = (img.width - crop) / 2;
  const std::size_t y_off = (img.height - crop) / 2;

  // Area resample crop x crop -> side x side; output cell (i, j) spans
  // [i*crop, (i+1)*crop) in units of 1/side source pixel.
  auto weight = [&](std::size_t cell, std::size_t px) -> double {
    const std::size_t lo = std::max(cell * crop, px * side);
    const std::size_t hi = std::min((cell + 1) * crop, (px + 1) * side);
    return hi > lo ? static_cast<double>(hi - lo) : 0.0;
  };
  const double area = static_cast<double>(crop) * static_cast<double>(crop);

  std::vector<float> out(3 * side * side);
  for (std::size_t oy = 0; oy < side; ++oy) {
    const std::size_t y0 = oy * crop / side;
    const std::size_t y1 = std::min(crop, ((oy + 1) * crop + side - 1) / side);
    for (std::size_t ox = 0; ox < side; ++ox) {
      const std::size_t x0 = ox * crop / side;
      const std::size_t x1 = std::min(crop, ((ox + 1) * crop + side - 1) / side);
      double acc[3] = {0, 0, 0};
      for (std::size_t y = y0; y < y1; ++y) {
        const double wy = weight(oy, y);
        for (std::size_t x = x0; x < x1; ++x) {
          const double w = wy * weight(ox, x);
          for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t ch = img.channels < 3 ? 0 : c;
            acc[c] += w * img.at(x_off + x, y_off + y, ch);
          }
        }
      }
      for (std::size_t c = 0; c < 3; ++c)
        out[(c * side + oy) * side + ox] =
            static_cast<float>((acc[c] / area / 255.0 - mean[c]) / stddev[c]);
    }
  }
  return out;
}

std::vector<std::uint32_t> tokenize(std::string_view text, std::uint32_t vocab_size) {
  if (vocab_size == 0) throw std::invalid_argument("tokenize: vocab_size must be positive");
  const std::string clean = case_fold(sanitize_text(text));
  std::vector<std::uint32_t> ids;
  std::size_t start = 0;
  while (start < clean.size()) {
    std::size_t end = clean.find(' ', start);
    if (end == std::string::npos) end = clean.size();
    ids.push_back(static_cast<std::uint32_t>(
        fnv1a64(std::string_view(clean).substr(start, end - start)) % vocab_size));
    start = end + 1;
  }
  return ids;
}

namespace {

double signed_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
}

}  // namespace

ScoreVector HashedTextEncoder::encode(const Post& post) const {
  const auto ids = tokenize(post.text, vocab_size_);
  if (ids.empty()) throw MissingModalityError(Modality::Text);
  ScoreVector s{};
  for (std::uint32_t id : ids)
    for (std::size_t c = 0; c < kNumClasses; ++c) s[c] += signed_unit(derive_seed(seed_, {id, c}));
  const double scale = 1.0 / std::sqrt(static_cast<double>(ids.size()));
  for (double& v : s) v *= scale;
  return s;
}

DHashImageEncoder::DHashImageEncoder(std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, {fnv1a64("dhash-linear")}));
  for (auto& w : weights_)
    for (double& v : w) v = 2.0 * rng.uniform() - 1.0;
}

ScoreVector DHashImageEncoder::encode(const Post& post) const {
  if (!post.image) throw MissingModalityError(Modality::Image);
  ImageHash h;
  try {
    h = dhash(decode_image(*post.image));
  } catch (const ImageDecodeError&) {
    throw MissingModalityError(Modality::Image);
  }
  ScoreVector s{};
  for (std::size_t i = 0; i < 64; ++i) {
    const double sign = ((h.bits >> (63 - i)) & 1u) ? 1.0 : -1.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) s[c] += sign * weights_[i][c];
  }
  for (double& v : s) v /= 8.0;
  return s;
}

ScoreVector PrecomputedEncoder::encode(const Post& post) const {
  auto it = scores_.find(post.id);
  if (it == scores_.end()) throw MissingModalityError(modality_);
  return it->second;
}

std::unordered_map<std::string, ScoreVector> parse_score_csv(std::string_view contents) {
  std::unordered_map<std::string, ScoreVector> out;
  std::size_t start = 0, line_no = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    const std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "id") continue;
    if (fields.size() != 4 || fields[0].empty())
      throw DataError("score csv line " + std::to_string(line_no) + ": expected id,s0,s1,s2");
    ScoreVector s;
    for (std::size_t c = 0; c < 3; ++c) {
      const std::string& f = fields[c + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), s[c]);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(s[c]))
        throw DataError("score csv line " + std::to_string(line_no) + ": bad score '" + f + "'");
    }
    out[fields[0]] = s;
  }
  return out;
}

std::unordered_map<std::string, ScoreVector> load_score_csv(const std::filesystem::path& path) {
  return parse_score_csv(read_file(path));
}

}  // namespace curafuse
