#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

namespace curafuse::testing {

std::string sanitize_oracle(const std::string& raw) {
  static const std::regex scheme("^[A-Za-z][A-Za-z0-9+.\\-]*://");
  static const std::regex short_link("^(t\\.co/|www\\.)", std::regex::icase);
  std::istringstream in(raw);
  std::string tok, out;
  while (in >> tok) {
    if (tok[0] == '@' || tok[0] == '#') continue;
    if (std::regex_search(tok, scheme) || std::regex_search(tok, short_link)) continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

std::uint64_t dhash_oracle(const Raster& img) {
  const std::size_t W = img.width, H = img.height;
  auto luma = [&](std::size_t x, std::size_t y) -> long long {
    if (img.channels == 1) return 1000LL * img.at(x, y, 0);
    return 299LL * img.at(x, y, 0) + 587LL * img.at(x, y, 1) + 114LL * img.at(x, y, 2);
  };
  // enlarged image is 9W x 8H; block (r, c) covers columns [cW, (c+1)W) and rows [rH, (r+1)H)
  long long cell[8][9] = {};
  for (std::size_t Y = 0; Y < 8 * H; ++Y)
    for (std::size_t X = 0; X < 9 * W; ++X) cell[Y / H][X / W] += luma(X / 9, Y / 8);
  std::uint64_t bits = 0;
  int pos = 63;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c, --pos)
      if (cell[r][c] < cell[r][c + 1]) bits |= 1ULL << pos;
  return bits;
}

DedupOracle dedup_oracle(const Dataset& d, double threshold) {
  const std::size_t n = d.posts.size();
  std::vector<std::optional<std::uint64_t>> hashes(n);
  std::vector<std::string> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Post& p = d.posts[i];
    if (p.image) {
      try {
        const Raster r = decode_image(*p.image);
        if (!r.empty()) hashes[i] = dhash_oracle(r);
      } catch (const std::exception&) {
      }
    }
    std::string k = sanitize_oracle(p.text);
    for (char& ch : k)
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    keys[i] = k;
  }
  DedupOracle o;
  for (std::size_t i = 0; i < n; ++i) {
    bool id = false, text = false, image = false;
    for (std::size_t j : o.kept) {
      id = id || d.posts[j].id == d.posts[i].id;
      text = text || (!keys[i].empty() && keys[i] == keys[j]);
      if (hashes[i] && hashes[j]) {
        const double sim = 1.0 - std::popcount(*hashes[i] ^ *hashes[j]) / 64.0;
        image = image || sim > threshold;
      }
    }
    if (id) ++o.by_id;
    else if (text) ++o.by_text;
    else if (image) ++o.by_image;
    else o.kept.push_back(i);
  }
  return o;
}

long double cosine_oracle(const Embedding& a, const Embedding& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

std::size_t nearest_by_cosine(std::span<const Embedding> vs, std::size_t i) {
  std::size_t best = i == 0 ? 1 : 0;
  long double best_c = -2;
  for (std::size_t j = 0; j < vs.size(); ++j) {
    if (j == i) continue;
    const long double c = cosine_oracle(vs[i], vs[j]);
    if (c > best_c) {
      best_c = c;
      best = j;
    }
  }
  return best;
}

std::vector<std::uint64_t> signature_oracle(const Embedding& v, const Hyperplanes& planes) {
  const auto& p = planes.params();
  std::vector<std::uint64_t> keys(p.tables, 0);
  for (std::size_t t = 0; t < p.tables; ++t) {
    for (std::size_t b = 0; b < p.bits; ++b) {
      const auto plane = planes.plane(t, b);
      double s = 0;
      for (std::size_t i = 0; i < kEmbeddingDim; ++i) s += static_cast<double>(v[i]) * plane[i];
      if (s >= 0) keys[t] |= 1ULL << b;
    }
  }
  return keys;
}

TallyMetrics tally_metrics(std::span<const int> preds, std::span<const int> truth) {
  TallyMetrics m;
  std::size_t right = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    m.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(preds[i])] += 1;
    right += preds[i] == truth[i];
  }
  m.accuracy = static_cast<double>(right) / static_cast<double>(preds.size());
  for (int c = 0; c < 3; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == c && truth[i] == c) ++tp;
      if (preds[i] == c && truth[i] != c) ++fp;
      if (preds[i] != c && truth[i] == c) ++fn;
    }
    const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.precision[c] = p;
    m.recall[c] = r;
    m.f1[c] = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  m.macro_precision = (m.precision[0] + m.precision[1] + m.precision[2]) / 3;
  m.macro_recall = (m.recall[0] + m.recall[1] + m.recall[2]) / 3;
  m.macro_f1 = (m.f1[0] + m.f1[1] + m.f1[2]) / 3;
  return m;
}

EnumeratedAreas enumerate_areas(std::span<const double> scores, std::span<const int> positive) {
  EnumeratedAreas a;
  std::size_t P = 0, N = 0;
  for (int p : positive) (p ? P : N) += 1;
  if (P == 0 || N == 0) return a;
  a.defined = true;
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double fx = 0, fy = 0, rx = 0, ry = 1;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= t) (positive[i] ? tp : fp) += 1;
    const double x = static_cast<double>(fp) / N, y = static_cast<double>(tp) / P;
    a.roc += (x - fx) * (y + fy) / 2;
    fx = x;
    fy = y;
    const double prec = static_cast<double>(tp) / static_cast<double>(tp + fp);
    a.pr += (y - rx) * (prec + ry) / 2;
    rx = y;
    ry = prec;
  }
  return a;
}

double mann_whitney_auc(std::span<const double> scores, std::span<const int> positive) {
  long long twice_wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      ++pairs;
      twice_wins += scores[i] > scores[j] ? 2 : scores[i] == scores[j] ? 1 : 0;
    }
  }
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pairs));
}

std::vector<double> normal_equations_fit(std::span<const double> xs, std::span<const double> ys, std::size_t degree) {
  using LD = long double;
  const std::size_t n = xs.size(), m = degree + 1;
  LD mu = 0;
  for (double x : xs) mu += x;
  mu /= static_cast<LD>(n);
  LD s = 0;
  for (double x : xs) s = std::max(s, std::fabs(static_cast<LD>(x) - mu));
  if (s == 0) s = 1;

  std::vector<std::vector<LD>> A(m, std::vector<LD>(m + 1, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const LD t = (static_cast<LD>(xs[i]) - mu) / s;
    std::vector<LD> pw(m, 1);
    for (std::size_t k = 1; k < m; ++k) pw[k] = pw[k - 1] * t;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) A[r][c] += pw[r] * pw[c];
      A[r][m] += pw[r] * ys[i];
    }
  }
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const LD f = A[r][col] / A[col][col];
      for (std::size_t c = col; c <= m; ++c) A[r][c] -= f * A[col][c];
    }
  }
  std::vector<LD> a(m);
  for (std::size_t k = 0; k < m; ++k) a[k] = A[k][m] / A[k][k];

  // sum_k a_k ((x - mu)/s)^k expanded into powers of x
  std::vector<LD> out(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    LD binom = 1;
    for (std::size_t j = 0; j <= k; ++j) {
      out[j] += a[k] / std::pow(s, static_cast<LD>(k)) * binom * std::pow(-mu, static_cast<LD>(k - j));
      binom = binom * static_cast<LD>(k - j) / static_cast<LD>(j + 1);
    }
  }
  return {out.begin(), out.end()};
}

std::vector<std::array<unsigned, 3>> enumerate_schedules(unsigned days) {
  std::vector<std::array<unsigned, 3>> out;
  for (unsigned a = 1; a <= days; ++a)
    for (unsigned b = a + 2; b <= days; ++b)
      for (unsigned c = b + 2; c <= days; ++c) out.push_back({a, b, c});
  return out;
}

double ks_uniform(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - sample[i]);
    d = std::max(d, sample[i] - static_cast<double>(i) / n);
  }
  return d;
}

}  // namespace curafuse::testing
