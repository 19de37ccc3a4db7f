#pragma once

#include "curafuse/corpus.hpp"

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace curafuse {

struct MonthKey {
  int year = 1970;
  unsigned month = 1;  // 1..12

  friend auto operator<=>(const MonthKey&, const MonthKey&) = default;

  static MonthKey of(Timestamp t);
  /// "YYYY-MM"; nullopt if malformed.
  static std::optional<MonthKey> parse(std::string_view text);
  std::string str() const;
  unsigned days() const;
  /// Months from `origin` to this key (negative if earlier).
  long months_since(const MonthKey& origin) const noexcept;
  MonthKey next() const noexcept;
};

/// Three distinct days in [1, days], ascending, pairwise gaps >= 2, uniform over all such
/// triples; a pure function of (month, seed).
std::array<unsigned, 3> sampling_schedule(const MonthKey& month, std::uint64_t seed);

struct MonthlyPoint {
  MonthKey month;
  std::uint64_t examined = 0;
  std::uint64_t pro_ed = 0;
  double abundance = 0.0;  // percent
};

struct MonthlySeries {
  std::vector<MonthlyPoint> points;  // ascending by month
};

struct ClassifiedPost {
  Timestamp posted_at{};
  Label predicted = Label::Neutral;
};

/// 100 * count / examined. Throws std::invalid_argument if examined == 0 or count > examined.
double relative_abundance(std::uint64_t count, std::uint64_t examined);

/// Groups by calendar month (UTC); months with no posts are absent.
MonthlySeries aggregate_monthly(std::span<const ClassifiedPost> posts);

struct PolyFit {
  std::size_t degree = 0;
  std::vector<double> coefficients;  // ascending powers of x
  double rss = 0.0;
  double tss = 0.0;
  double r2 = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;

  double evaluate(double x) const noexcept;
};

/// Least squares via column-pivoted Householder QR on centered, scaled x; coefficients are
/// reported in the original x units. Throws std::invalid_argument when there are not more
/// than degree + 1 points, inputs are non-finite, or the design is rank-deficient.
PolyFit polyfit(std::span<const double> xs, std::span<const double> ys, std::size_t degree = 3);

/// Overall F-test against the intercept-only model; p from the F(degree, n-degree-1) upper
/// tail via the regularized incomplete beta function. RSS == 0 gives 0; no explained
/// variance gives 1.
double regression_pvalue(const PolyFit& fit, std::size_t n);

/// x values for a series: months since its first point.
std::vector<double> month_index(const MonthlySeries& s);
std::vector<double> abundances(const MonthlySeries& s);

/// Cubic (or other degree) fit of abundance against month index.
PolyFit fit_series(const MonthlySeries& s, std::size_t degree = 3);

/// Degree-1 fit restricted to points at or after `from`, with x measured from the first
/// point of the full series. Throws std::invalid_argument with fewer than 3 such points.
PolyFit linear_fit(const MonthlySeries& s, const MonthKey& from = {2018, 1});

/// CSV rows "series_id,year,month,examined,pro_ed,abundance".
std::string series_csv_rows(std::string_view series_id, const MonthlySeries& s);
/// CSV row "series_id,degree,c0,c1,c2,c3,rss,r2,p_value"; missing coefficients are 0.
std::string fit_csv_row(std::string_view series_id, const PolyFit& fit);

inline constexpr std::string_view kSeriesCsvHeader = "series_id,year,month,examined,pro_ed,abundance\n";
inline constexpr std::string_view kFitCsvHeader = "series_id,degree,c0,c1,c2,c3,rss,r2,p_value\n";

}  // namespace curafuse
