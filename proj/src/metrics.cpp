#include "doctor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace doctor::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_items(const std::vector<RejectionScoredItem>& items) {
  if (items.empty()) throw std::invalid_argument("no scored items");
  for (const auto& it : items) {
    if (std::isnan(it.rejection_score) || it.rejection_score == -kInf) {
      throw std::invalid_argument("rejection score must be finite or +infinity");
    }
    if (it.error_bit != 0 && it.error_bit != 1) {
      throw std::invalid_argument("error bit must be 0 or 1");
    }
  }
}

void require_both_classes(const std::vector<RejectionScoredItem>& items) {
  long long n1 = 0;
  for (const auto& it : items) n1 += it.error_bit;
  if (n1 == 0 || n1 == static_cast<long long>(items.size())) {
    throw std::runtime_error("ROC needs both E-classes present");
  }
}

}  // namespace

ConfusionCounts confusion(const std::vector<RejectionScoredItem>& items, double threshold) {
  validate_items(items);
  ConfusionCounts c;
  for (const auto& it : items) {
    const bool reject = it.rejection_score > threshold;
    if (reject) {
      (it.error_bit ? c.TR : c.FR) += 1;
    } else {
      (it.error_bit ? c.FA : c.TA) += 1;
    }
  }
  return c;
}

std::pair<double, double> type_errors(const ConfusionCounts& c) {
  const long long n0 = c.FR + c.TA;
  const long long n1 = c.FA + c.TR;
  if (n0 == 0 || n1 == 0) throw std::runtime_error("type_errors: an E-class is empty");
  return {static_cast<double>(c.FR) / static_cast<double>(n0),
          static_cast<double>(c.FA) / static_cast<double>(n1)};
}

RocCurve roc_exact(const std::vector<RejectionScoredItem>& items) {
  validate_items(items);
  require_both_classes(items);

  std::vector<std::pair<double, int>> data;
  data.reserve(items.size());
  long long n1 = 0;
  for (const auto& it : items) {
    data.emplace_back(it.rejection_score, it.error_bit);
    n1 += it.error_bit;
  }
  const long long n0 = static_cast<long long>(items.size()) - n1;
  std::sort(data.begin(), data.end());

  // Unique-score groups in ascending order.
  struct Group {
    double score;
    long long a;  // E=1 count
    long long b;  // E=0 count
  };
  std::vector<Group> groups;
  for (std::size_t i = 0; i < data.size();) {
    std::size_t j = i;
    Group g{data[i].first, 0, 0};
    while (j < data.size() && data[j].first == g.score) {
      (data[j].second ? g.a : g.b) += 1;
      ++j;
    }
    groups.push_back(g);
    i = j;
  }

  // Mann-Whitney numerator in halves: 2*(strictly greater pairs) + ties.
  long long greater = 0, ties = 0, b_below = 0;
  for (const Group& g : groups) {
    greater += g.a * b_below;
    ties += g.a * g.b;
    b_below += g.b;
  }

  RocCurve curve;
  curve.mode = RocMode::exact;
  curve.auroc_num = 2 * greater + ties;
  curve.auroc_den = 2 * n1 * n0;

  // Sweep thresholds from the largest score down; reject iff score > t.
  curve.points.reserve(groups.size() + 1);
  long long rej1 = 0, rej0 = 0;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    curve.points.push_back({it->score,
                            static_cast<double>(rej0) / static_cast<double>(n0),
                            static_cast<double>(rej1) / static_cast<double>(n1)});
    rej1 += it->a;
    rej0 += it->b;
  }
  curve.points.push_back({-kInf, 1.0, 1.0});
  return curve;
}

RocCurve roc_grid(const std::vector<RejectionScoredItem>& items) {
  validate_items(items);
  require_both_classes(items);

  std::vector<double> s0, s1;
  long long inf0 = 0, inf1 = 0;
  for (const auto& it : items) {
    if (it.rejection_score == kInf) {
      (it.error_bit ? inf1 : inf0) += 1;
    } else {
      (it.error_bit ? s1 : s0).push_back(it.rejection_score);
    }
  }
  const double n0 = static_cast<double>(s0.size() + inf0);
  const double n1 = static_cast<double>(s1.size() + inf1);

  double lo = kInf, hi = -kInf;
  for (double v : s0) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : s1) lo = std::min(lo, v), hi = std::max(hi, v);

  if (!(hi > lo)) {
    RocCurve fallback = roc_exact(items);
    fallback.mode = RocMode::grid;
    fallback.degenerate_fallback = true;
    return fallback;
  }

  const long long raw = std::llround((hi - lo) * 10000.0);
  const long long n_thresholds = std::clamp<long long>(raw, 2, 200000);

  std::sort(s0.begin(), s0.end());
  std::sort(s1.begin(), s1.end());
  const auto rejected_above = [](const std::vector<double>& s, double t) {
    return static_cast<double>(s.end() - std::upper_bound(s.begin(), s.end(), t));
  };

  RocCurve curve;
  curve.mode = RocMode::grid;
  curve.points.reserve(static_cast<std::size_t>(n_thresholds) + 2);
  curve.points.push_back({kInf, 0.0, 0.0});
  for (long long i = n_thresholds - 1; i >= 0; --i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) /
                              static_cast<double>(n_thresholds - 1);
    curve.points.push_back({t,
                            (rejected_above(s0, t) + static_cast<double>(inf0)) / n0,
                            (rejected_above(s1, t) + static_cast<double>(inf1)) / n1});
  }
  curve.points.push_back({-kInf, 1.0, 1.0});
  return curve;
}

double auroc(const RocCurve& curve) {
  if (curve.auroc_den > 0) {
    return static_cast<double>(curve.auroc_num) / static_cast<double>(curve.auroc_den);
  }
  if (curve.points.size() < 2) throw std::invalid_argument("curve needs at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i - 1];
    const auto& q = curve.points[i];
    area += 0.5 * (q.frr - p.frr) * (p.trr + q.trr);
  }
  return area;
}

FrrAtTrr frr_at_trr(const RocCurve& curve, double target) {
  if (curve.points.empty()) throw std::invalid_argument("empty curve");
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    if (p.trr >= target) {
      if (p.trr == target || i == 0) return {p.frr, false};
      const auto& prev = curve.points[i - 1];
      const double t = (target - prev.trr) / (p.trr - prev.trr);
      return {prev.frr + t * (p.frr - prev.frr), false};
    }
  }
  return {1.0, true};
}

}  // namespace doctor::metrics
