#pragma once

#include "curafuse/corpus.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace curafuse {

/// counts[truth][predicted].
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws std::invalid_argument on empty input, mismatched lengths, or codes outside {0,1,2}.
ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truth);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  ConfusionMatrix confusion;

  std::string to_json() const;
};

/// Per-class precision = diag/colsum, recall = diag/rowsum, f1 = harmonic mean (0/0 := 0);
/// macro = unweighted mean over the three classes. Throws if the matrix is empty.
MetricReport metrics(const ConfusionMatrix& cm);

struct CurvePoint {
  double threshold = 0.0;  // +inf for the starting point
  double x = 0.0;          // FPR (ROC) or recall (PR)
  double y = 0.0;          // TPR (ROC) or precision (PR)
};

struct Curve {
  bool defined = false;
  std::vector<CurvePoint> roc;
  std::vector<CurvePoint> pr;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
};

/// One-vs-rest curves for each class plus the macro curve (index 3).
struct CurveSet {
  std::array<Curve, kNumClasses + 1> curves;

  const Curve& macro() const noexcept { return curves[kNumClasses]; }
  /// Rows "class,threshold,x,y"; class is 0, 1, 2 or "macro".
  std::string roc_csv() const;
  std::string pr_csv() const;
};

using ProbRow = std::array<double, kNumClasses>;

/// For class c, samples are scored by prob_rows[i][c] and the threshold sweeps the distinct
/// observed scores in descending order (score >= t predicts positive). ROC starts at (0, 0),
/// PR at (recall 0, precision 1); areas are trapezoidal. A class with no positives or no
/// negatives in truth is left undefined and excluded from the macro curve, which averages
/// the defined classes pointwise over the union of their thresholds.
/// Throws std::invalid_argument on invalid distributions or mismatched lengths.
CurveSet ovr_curves(std::span<const ProbRow> prob_rows, std::span<const int> truth);

/// Trapezoidal area under (x, y) points taken in order.
double trapezoid_area(std::span<const CurvePoint> points) noexcept;

}  // namespace curafuse
