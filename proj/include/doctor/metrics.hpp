#pragma once

#include <string>
#include <utility>
#include <vector>

#include "doctor/experiment_config.hpp"

namespace doctor::metrics {

// Canonical unit of ROC construction: reject iff rejection_score > threshold;
// error_bit is E(x) = 1[y != f(x)]. Scores are finite or +infinity.
struct RejectionScoredItem {
  std::string id;
  double rejection_score = 0.0;
  int error_bit = 0;
};

struct ConfusionCounts {
  long long FR = 0;  // rejected, E=0
  long long TR = 0;  // rejected, E=1
  long long FA = 0;  // accepted, E=1
  long long TA = 0;  // accepted, E=0
};

enum class RocMode { exact, grid };

struct RocPoint {
  double threshold = 0.0;
  double frr = 0.0;
  double trr = 0.0;
};

// Points are sorted by FRR non-decreasing and always contain (0,0) and (1,1).
// Exact-mode curves carry the Mann-Whitney AUROC as an integer rational so
// that auroc() reproduces pair counting bit for bit.
struct RocCurve {
  std::vector<RocPoint> points;
  RocMode mode = RocMode::exact;
  bool degenerate_fallback = false;
  long long auroc_num = -1;
  long long auroc_den = -1;
};

ConfusionCounts confusion(const std::vector<RejectionScoredItem>& items, double threshold);

// (eps0, eps1) = (FR/(FR+TA), FA/(FA+TR)); throws when an E-class is empty.
std::pair<double, double> type_errors(const ConfusionCounts& c);

// One operating point per unique score plus sentinels; AUROC equals the
// Mann-Whitney statistic with ties counted half.
RocCurve roc_exact(const std::vector<RejectionScoredItem>& items);

// Thresholds evenly spaced on I = [min, max] of the finite scores,
// N = round((max - min) * 10000) clamped to [2, 200000]; degenerate intervals
// fall back to roc_exact with degenerate_fallback set. Infinite scores are
// rejected at every threshold and excluded from the interval.
RocCurve roc_grid(const std::vector<RejectionScoredItem>& items);

// Trapezoidal area of TRR over FRR (exact rational when the curve carries one).
double auroc(const RocCurve& curve);

struct FrrAtTrr {
  double frr = 1.0;
  bool saturated = false;
};

// Minimum FRR among operating points with TRR >= target, linearly
// interpolated between the bracketing points; saturated result 1.0 when the
// curve never reaches the target.
FrrAtTrr frr_at_trr(const RocCurve& curve, double target = 0.95);

struct Prop1Result {
  double eps0_avg = 0.0;
  double eps1_avg = 0.0;
  std::vector<std::pair<double, double>> per_split;
};

// The appendix Monte-Carlo protocol: per split train a classifier, reject by
// optimal_score > gamma on the test set, average Type-I/II errors over splits.
Prop1Result prop1_monte_carlo(const ExperimentConfig& cfg, double gamma = 1.0);

}  // namespace doctor::metrics
