#include "curafuse/trend.hpp"

#include "curafuse/io.hpp"
#include "curafuse/rng.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace curafuse {

MonthKey MonthKey::of(Timestamp t) {
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(t)};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
}

std::optional<MonthKey> MonthKey::parse(std::string_view s) {
  if (s.size() != 7 || s[4] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    y = y * 10 + (s[i] - '0');
  }
  for (std::size_t i = 5; i < 7; ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    m = m * 10 + static_cast<unsigned>(s[i] - '0');
  }
  if (m < 1 || m > 12) return std::nullopt;
  return MonthKey{y, m};
}

std::string MonthKey::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
  return buf;
}

unsigned MonthKey::days() const {
  using namespace std::chrono;
  return static_cast<unsigned>((year_month_day_last{std::chrono::year{year}, month_day_last{std::chrono::month{month}}}).day());
}

long MonthKey::months_since(const MonthKey& origin) const noexcept {
  return (static_cast<long>(year) - origin.year) * 12 + (static_cast<long>(month) - origin.month);
}

MonthKey MonthKey::next() const noexcept {
  return month == 12 ? MonthKey{year + 1, 1} : MonthKey{year, month + 1};
}

std::array<unsigned, 3> sampling_schedule(const MonthKey& m, std::uint64_t seed) {
  // Gap-2 triples a < b-1 < c-2 in [1, D] biject with 3-subsets {a, b-1, c-2} of [1, D-2].
  const unsigned pool = m.days() - 2;
  CounterRng rng(derive_seed(seed, {fnv1a64("schedule"), static_cast<std::uint64_t>(m.year), m.month}));
  std::vector<unsigned> values(pool);
  std::iota(values.begin(), values.end(), 1u);
  for (unsigned i = 0; i < 3; ++i) {
    const auto j = i + static_cast<unsigned>(rng.below(pool - i));
    std::swap(values[i], values[j]);
  }
  std::array<unsigned, 3> pick{values[0], values[1], values[2]};
  std::sort(pick.begin(), pick.end());
  return {pick[0], pick[1] + 1, pick[2] + 2};
}

double relative_abundance(std::uint64_t count, std::uint64_t examined) {
  if (examined == 0) throw std::invalid_argument("relative_abundance: nothing examined");
  if (count > examined) throw std::invalid_argument("relative_abundance: count exceeds examined");
  return 100.0 * static_cast<double>(count) / static_cast<double>(examined);
}

MonthlySeries aggregate_monthly(std::span<const ClassifiedPost> posts) {
  std::map<MonthKey, std::pair<std::uint64_t, std::uint64_t>> tally;
  for (const ClassifiedPost& p : posts) {
    auto& [examined, pro_ed] = tally[MonthKey::of(p.posted_at)];
    ++examined;
    if (p.predicted == Label::ProED) ++pro_ed;
  }
  MonthlySeries s;
  for (const auto& [key, counts] : tally)
    s.points.push_back({key, counts.first, counts.second, relative_abundance(counts.second, counts.first)});
  return s;
}

double PolyFit::evaluate(double x) const noexcept {
  double acc = 0.0;
  for (std::size_t k = coefficients.size(); k-- > 0;) acc = acc * x + coefficients[k];
  return acc;
}

PolyFit polyfit(std::span<const double> xs, std::span<const double> ys, std::size_t degree) {
  const std::size_t n = xs.size();
  if (ys.size() != n) throw std::invalid_argument("polyfit: xs and ys differ in length");
  if (n <= degree + 1)
    throw std::invalid_argument("polyfit: need more than degree + 1 = " + std::to_string(degree + 1) + " points");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw std::invalid_argument("polyfit: non-finite input");

  const std::set<double> distinct(xs.begin(), xs.end());
  if (distinct.size() <= degree)
    throw std::invalid_argument("polyfit: rank-deficient design, " + std::to_string(distinct.size()) +
                                " distinct x values cannot determine a degree-" + std::to_string(degree) +
                                " polynomial");

  const double mu = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  double scale = 0.0;
  for (double x : xs) scale = std::max(scale, std::abs(x - mu));
  if (scale == 0.0) scale = 1.0;

  const auto cols = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), cols);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (xs[i] - mu) / scale;
    double p = 1.0;
    for (Eigen::Index k = 0; k < cols; ++k, p *= t) design(static_cast<Eigen::Index>(i), k) = p;
    y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols)
    throw std::invalid_argument("polyfit: rank-deficient design (numerical rank " + std::to_string(qr.rank()) +
                                " < " + std::to_string(cols) + ")");
  const Eigen::VectorXd a = qr.solve(y);

  PolyFit fit;
  fit.degree = degree;
  fit.n = n;
  const Eigen::VectorXd resid = y - design * a;
  fit.rss = resid.squaredNorm();
  const double ybar = y.mean();
  fit.tss = (y.array() - ybar).square().sum();
  fit.r2 = fit.tss > 0.0 ? 1.0 - fit.rss / fit.tss : 1.0;

  // p(x) = sum_k a_k ((x - mu) / s)^k, expanded binomially into powers of x.
  fit.coefficients.assign(degree + 1, 0.0);
  for (std::size_t k = 0; k <= degree; ++k) {
    const double ak = a(static_cast<Eigen::Index>(k)) / std::pow(scale, static_cast<double>(k));
    double binom = 1.0;  // C(k, j)
    for (std::size_t j = 0; j <= k; ++j) {
      fit.coefficients[j] += ak * binom * std::pow(-mu, static_cast<double>(k - j));
      binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
    }
  }
  fit.p_value = regression_pvalue(fit, n);
  return fit;
}

double regression_pvalue(const PolyFit& fit, std::size_t n) {
  if (n <= fit.degree + 1) throw std::invalid_argument("regression_pvalue: n must exceed degree + 1");
  if (fit.degree == 0) return 1.0;
  if (fit.rss == 0.0) return 0.0;
  const double explained = fit.tss - fit.rss;
  if (!(explained > 0.0)) return 1.0;
  const double d1 = static_cast<double>(fit.degree);
  const double d2 = static_cast<double>(n - fit.degree - 1);
  const double f = (explained / d1) / (fit.rss / d2);
  // Upper tail of F(d1, d2): I_{d2 / (d2 + d1 F)}(d2/2, d1/2).
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

std::vector<double> month_index(const MonthlySeries& s) {
  std::vector<double> xs;
  xs.reserve(s.points.size());
  for (const MonthlyPoint& p : s.points)
    xs.push_back(static_cast<double>(p.month.months_since(s.points.front().month)));
  return xs;
}

std::vector<double> abundances(const MonthlySeries& s) {
  std::vector<double> ys;
  ys.reserve(s.points.size());
  for (const MonthlyPoint& p : s.points) ys.push_back(p.abundance);
  return ys;
}

PolyFit fit_series(const MonthlySeries& s, std::size_t degree) {
  return polyfit(month_index(s), abundances(s), degree);
}

PolyFit linear_fit(const MonthlySeries& s, const MonthKey& from) {
  std::vector<double> xs, ys;
  if (!s.points.empty()) {
    const MonthKey origin = s.points.front().month;
    for (const MonthlyPoint& p : s.points) {
      if (p.month < from) continue;
      xs.push_back(static_cast<double>(p.month.months_since(origin)));
      ys.push_back(p.abundance);
    }
  }
  if (xs.size() < 3)
    throw std::invalid_argument("linear_fit: need at least 3 points from " + from.str() + ", have " +
                                std::to_string(xs.size()));
  return polyfit(xs, ys, 1);
}

std::string series_csv_rows(std::string_view series_id, const MonthlySeries& s) {
  std::string out;
  for (const MonthlyPoint& p : s.points) {
    out += series_id;
    out += "," + std::to_string(p.month.year) + "," + std::to_string(p.month.month) + "," +
           std::to_string(p.examined) + "," + std::to_string(p.pro_ed) + "," + format_double(p.abundance) + "\n";
  }
  return out;
}

std::string fit_csv_row(std::string_view series_id, const PolyFit& fit) {
  std::string out(series_id);
  out += "," + std::to_string(fit.degree);
  for (std::size_t k = 0; k < 4; ++k)
    out += "," + format_double(k < fit.coefficients.size() ? fit.coefficients[k] : 0.0);
  out += "," + format_double(fit.rss) + "," + format_double(fit.r2) + "," + format_double(fit.p_value) + "\n";
  return out;
}

}  // namespace curafuse
