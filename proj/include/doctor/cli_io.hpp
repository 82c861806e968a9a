#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "doctor/experiment_config.hpp"
#include "doctor/metrics.hpp"

namespace doctor::cli {

struct ScoreFileRecord {
  std::string id;
  int true_label = 0;
  std::vector<double> values;
  bool is_logits = false;
};

// Two encodings of the same records, sniffed by the first non-space byte:
// '{' selects JSON lines ({"id","label","values","kind"}), anything else CSV
// with header id,label,v1..vC,kind. C and kind must be consistent across the
// file; softmax rows are validated. Errors name the offending line.
std::vector<ScoreFileRecord> parse_score_file(const std::string& text);

// Flat JSON object mirroring ExperimentConfig field names; missing keys keep
// defaults, unknown keys are rejected.
ExperimentConfig load_config_file(const std::string& path);

// Runs the benchmark and writes report.json, report.csv and one
// roc_<method>.csv (threshold,frr,trr) per configured method into out_dir.
// Prints the aggregate eps0/eps1 per method.
int cmd_synth(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);

struct EvalOptions {
  std::string score_path;
  std::string fit_path;  // mhlnb training scores
  std::vector<MethodId> methods{MethodId::d_alpha, MethodId::d_beta, MethodId::sr};
  double temperature = 1.0;
  // NaN means "not given"; any set threshold switches from sweep metrics to
  // confusion counts (gamma: d_alpha/d_beta, delta: sr/odin, zeta: mhlnb).
  double gamma;
  double delta;
  double zeta;
  RocModeChoice roc_mode = RocModeChoice::exact;
  std::string out_dir = ".";
  EvalOptions();
};

// Scores an externally produced softmax/logits file. E-bit per row is
// 1[label != argmax values]. Sweep mode writes AUROC / FRR@95%TRR rows to
// metrics.csv; threshold mode writes FR/TR/FA/TA and eps0/eps1 instead.
int cmd_eval(const EvalOptions& opt, std::ostream& log);

struct HistOptions {
  std::string score_path;  // empty selects the synthetic benchmark
  std::string fit_path;
  ExperimentConfig synth_cfg;
  MethodId method = MethodId::d_beta;
  int bins = 10;
  double temperature = 1.0;
  std::string out_dir = ".";
};

// Writes hist_<method>.csv with rows bin_lo,bin_hi,count_e0,count_e1 over the
// method's rejection scores (+inf lands in the last bin).
int cmd_hist(const HistOptions& opt, std::ostream& log);

}  // namespace doctor::cli
