#pragma once

#include <string>
#include <utility>
#include <vector>

#include "doctor/experiment_config.hpp"
#include "doctor/gaussian_model.hpp"
#include "doctor/metrics.hpp"
#include "doctor/scoring.hpp"
#include "doctor/trainer.hpp"

namespace doctor::harness {

struct MarkovCheck {
  double eta = 0.0;
  double bound = 0.0;     // markov_epsilon(ce_risk, eta)
  double fraction = 0.0;  // empirical share of test points with Delta(x) >= bound
  bool holds = false;     // fraction <= eta
};

// NaN marks a metric the roc_mode did not request; emitters skip such fields.
struct MethodMetrics {
  MethodId method = MethodId::d_star;
  double auroc_exact;
  double auroc_grid;
  bool grid_degenerate = false;
  double frr_at_95_trr;
  bool frr_saturated = false;
  double eps0_at_gamma1;
  double eps1_at_gamma1;
  MethodMetrics();
};

struct SplitResult {
  int split_index = 0;
  double trained_accuracy = 0.0;
  double bayes_accuracy = 0.0;
  double ce_risk = 0.0;
  std::vector<MarkovCheck> markov;
  std::vector<MethodMetrics> methods;
};

// Arithmetic means of the per-split values; boolean fields are ORs.
struct Aggregate {
  int splits = 0;
  double trained_accuracy = 0.0;
  double bayes_accuracy = 0.0;
  double ce_risk = 0.0;
  std::vector<MarkovCheck> markov;
  std::vector<MethodMetrics> methods;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<SplitResult> per_split;
  Aggregate aggregate;
  // Test items pooled across splits per configured method, in config order;
  // feeds the ROC-curve and histogram emitters. Not serialized.
  std::vector<std::pair<MethodId, std::vector<metrics::RejectionScoredItem>>> pooled;
};

// One pool per run (or per split when cfg.resample_pool_per_split), split
// with seed base_seed + i, trained with seed mix_seed(base_seed, i).
// d_star scores come from the true model on unperturbed inputs at T=1; every
// other method scores the trained classifier's temperature-T softmax of the
// (optionally perturbed) input.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// One item per test sample: the method's canonical rejection score plus the
// error bit of the classifier's prediction on the unperturbed input.
// epsilon > 0 is rejected for sr (no gradient) and ignored by d_star; mhlnb
// requires a fitted model.
std::vector<metrics::RejectionScoredItem> score_dataset(
    const gaussian::GaussianBinaryModel& model,
    const trainer::LogisticClassifier& classifier,
    const std::vector<gaussian::LabeledSample>& test_set, MethodId method,
    double temperature, double epsilon,
    const scoring::MahalanobisModel* mhl = nullptr);

enum class ReportFormat { json, csv };

// json: the documented {schema_version, config, per_split, aggregate} object;
// csv: flat "split,method,metric,value" table (split "aggregate" for means,
// method "" for classifier-level rows). Field order is stable.
std::string emit_report(const ExperimentReport& report, ReportFormat format);

}  // namespace doctor::harness
