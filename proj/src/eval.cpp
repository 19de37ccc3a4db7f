#include "curafuse/eval.hpp"

#include "curafuse/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace curafuse {

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) t += counts[i][i];
  return t;
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truth) {
  if (preds.size() != truth.size())
    throw std::invalid_argument("confusion: predictions and truth differ in length");
  if (preds.empty()) throw std::invalid_argument("confusion: no samples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] > 2 || truth[i] < 0 || truth[i] > 2)
      throw std::invalid_argument("confusion: label code out of range");
    ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(preds[i])];
  }
  return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricReport metrics(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw std::invalid_argument("metrics: empty confusion matrix");
  MetricReport r;
  r.confusion = cm;
  r.accuracy = ratio(cm.trace(), total);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      row += cm.counts[c][k];
      col += cm.counts[k][c];
    }
    ClassMetrics& m = r.per_class[c];
    m.precision = ratio(cm.counts[c][c], col);
    m.recall = ratio(cm.counts[c][c], row);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    r.macro_precision += m.precision;
    r.macro_recall += m.recall;
    r.macro_f1 += m.f1;
  }
  r.macro_precision /= kNumClasses;
  r.macro_recall /= kNumClasses;
  r.macro_f1 /= kNumClasses;
  return r;
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["macro_precision"] = macro_precision;
  j["macro_recall"] = macro_recall;
  j["macro_f1"] = macro_f1;
  auto per = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    nlohmann::ordered_json m;
    m["class"] = std::string(label_name(decode_label(static_cast<int>(c))));
    m["precision"] = per_class[c].precision;
    m["recall"] = per_class[c].recall;
    m["f1"] = per_class[c].f1;
    per.push_back(std::move(m));
  }
  j["per_class"] = std::move(per);
  j["confusion"] = confusion.counts;
  j["total"] = confusion.total();
  return j.dump(2);
}

double trapezoid_area(std::span<const CurvePoint> pts) noexcept {
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
  return area;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scores of one class split by truth, both sorted descending.
struct ClassScores {
  std::vector<double> pos;
  std::vector<double> neg;

  // Number of entries >= t in a descending vector.
  static std::size_t at_least(const std::vector<double>& v, double t) {
    return static_cast<std::size_t>(
        std::upper_bound(v.begin(), v.end(), t, [](double a, double b) { return a > b; }) - v.begin());
  }
};

Curve class_curve(const ClassScores& s, std::span<const double> thresholds) {
  Curve c;
  c.defined = true;
  const double P = static_cast<double>(s.pos.size());
  const double N = static_cast<double>(s.neg.size());
  c.roc.push_back({kInf, 0.0, 0.0});
  c.pr.push_back({kInf, 0.0, 1.0});
  for (double t : thresholds) {
    const auto tp = ClassScores::at_least(s.pos, t);
    const auto fp = ClassScores::at_least(s.neg, t);
    c.roc.push_back({t, static_cast<double>(fp) / N, static_cast<double>(tp) / P});
    const double precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    c.pr.push_back({t, static_cast<double>(tp) / P, precision});
  }
  c.roc_auc = trapezoid_area(c.roc);
  c.pr_auc = trapezoid_area(c.pr);
  return c;
}

std::vector<double> distinct_descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string curve_csv(const CurveSet& set, bool roc) {
  std::string out = "class,threshold,x,y\n";
  for (std::size_t c = 0; c <= kNumClasses; ++c) {
    const Curve& curve = set.curves[c];
    if (!curve.defined) continue;
    const std::string name = c == kNumClasses ? "macro" : std::to_string(c);
    for (const CurvePoint& p : roc ? curve.roc : curve.pr)
      out += name + "," + format_double(p.threshold) + "," + format_double(p.x) + "," + format_double(p.y) + "\n";
  }
  return out;
}

}  // namespace

std::string CurveSet::roc_csv() const { return curve_csv(*this, true); }
std::string CurveSet::pr_csv() const { return curve_csv(*this, false); }

CurveSet ovr_curves(std::span<const ProbRow> rows, std::span<const int> truth) {
  if (rows.size() != truth.size()) throw std::invalid_argument("ovr_curves: length mismatch");
  for (const ProbRow& r : rows) {
    double sum = 0.0;
    for (double p : r) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw std::invalid_argument("ovr_curves: probabilities must lie in [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("ovr_curves: row does not sum to 1");
  }
  for (int t : truth)
    if (t < 0 || t > 2) throw std::invalid_argument("ovr_curves: label code out of range");

  std::array<ClassScores, kNumClasses> scores;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < kNumClasses; ++c)
      (truth[i] == static_cast<int>(c) ? scores[c].pos : scores[c].neg).push_back(rows[i][c]);

  CurveSet set;
  std::vector<double> shared;
  std::vector<std::size_t> defined;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& s = scores[c];
    if (s.pos.empty() || s.neg.empty()) continue;
    std::sort(s.pos.begin(), s.pos.end(), std::greater<>());
    std::sort(s.neg.begin(), s.neg.end(), std::greater<>());
    std::vector<double> all = s.pos;
    all.insert(all.end(), s.neg.begin(), s.neg.end());
    const auto thresholds = distinct_descending(all);
    set.curves[c] = class_curve(s, thresholds);
    shared.insert(shared.end(), all.begin(), all.end());
    defined.push_back(c);
  }
  if (defined.empty()) return set;

  const auto grid = distinct_descending(std::move(shared));
  std::vector<Curve> on_grid;
  for (std::size_t c : defined) on_grid.push_back(class_curve(scores[c], grid));
  Curve& macro = set.curves[kNumClasses];
  macro.defined = true;
  const double k = static_cast<double>(on_grid.size());
  for (std::size_t i = 0; i <= grid.size(); ++i) {
    CurvePoint roc{on_grid[0].roc[i].threshold, 0.0, 0.0};
    CurvePoint pr{on_grid[0].pr[i].threshold, 0.0, 0.0};
    for (const Curve& c : on_grid) {
      roc.x += c.roc[i].x / k;
      roc.y += c.roc[i].y / k;
      pr.x += c.pr[i].x / k;
      pr.y += c.pr[i].y / k;
    }
    macro.roc.push_back(roc);
    macro.pr.push_back(pr);
  }
  macro.roc_auc = trapezoid_area(macro.roc);
  macro.pr_auc = trapezoid_area(macro.pr);
  return set;
}

}  // namespace curafuse
