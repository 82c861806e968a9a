#include "doctor/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "doctor/harness.hpp"
#include "doctor/scoring.hpp"

namespace doctor::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) f = trim(f);
  return fields;
}

[[noreturn]] void line_error(int lineno, const std::string& what) {
  throw std::invalid_argument("line " + std::to_string(lineno) + ": " + what);
}

bool kind_is_logits(const std::string& kind, int lineno) {
  if (kind == "logits") return true;
  if (kind == "softmax") return false;
  line_error(lineno, "kind must be 'softmax' or 'logits', got '" + kind + "'");
}

double parse_real(const std::string& s, int lineno) {
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::invalid_argument&) {
    line_error(lineno, "not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    line_error(lineno, "number out of range: '" + s + "'");
  }
  if (used != s.size()) line_error(lineno, "trailing characters in number '" + s + "'");
  return v;
}

void check_record(ScoreFileRecord& r, std::size_t expected_c, bool expected_logits,
                  int lineno) {
  if (r.values.size() != expected_c) {
    line_error(lineno, "expected " + std::to_string(expected_c) + " values, got " +
                           std::to_string(r.values.size()));
  }
  if (r.is_logits != expected_logits) line_error(lineno, "mixed kinds in one file");
  if (r.true_label < 0 || static_cast<std::size_t>(r.true_label) >= expected_c) {
    line_error(lineno, "label " + std::to_string(r.true_label) + " outside [0, " +
                           std::to_string(expected_c) + ")");
  }
  for (double v : r.values) {
    if (!std::isfinite(v)) line_error(lineno, "non-finite value");
  }
  if (!r.is_logits) {
    try {
      scoring::validate_softmax(r.values);
    } catch (const std::exception& e) {
      line_error(lineno, e.what());
    }
  }
}

}  // namespace

std::vector<ScoreFileRecord> parse_score_file(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw std::invalid_argument("empty score file");

  std::vector<ScoreFileRecord> records;
  std::size_t expected_c = 0;
  bool expected_logits = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  if (text[first] == '{') {
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty()) continue;
      ScoreFileRecord r;
      try {
        const auto j = nlohmann::json::parse(t);
        r.id = j.at("id").get<std::string>();
        r.true_label = j.at("label").get<int>();
        r.values = j.at("values").get<std::vector<double>>();
        r.is_logits = kind_is_logits(j.at("kind").get<std::string>(), lineno);
        for (const auto& item : j.items()) {
          if (item.key() != "id" && item.key() != "label" && item.key() != "values" &&
              item.key() != "kind") {
            line_error(lineno, "unknown key '" + item.key() + "'");
          }
        }
      } catch (const nlohmann::json::exception& e) {
        line_error(lineno, e.what());
      }
      if (records.empty()) {
        if (r.values.size() < 2) line_error(lineno, "need at least two classes");
        expected_c = r.values.size();
        expected_logits = r.is_logits;
      }
      check_record(r, expected_c, expected_logits, lineno);
      records.push_back(std::move(r));
    }
  } else {
    if (!std::getline(in, line)) throw std::invalid_argument("missing header");
    ++lineno;
    const auto header = split_line(line);
    if (header.size() < 4 || header.front() != "id" || header[1] != "label" ||
        header.back() != "kind") {
      line_error(lineno, "header must be id,label,v1..vC,kind");
    }
    expected_c = header.size() - 3;
    for (std::size_t i = 0; i < expected_c; ++i) {
      if (header[2 + i] != "v" + std::to_string(i + 1)) {
        line_error(lineno, "value columns must be named v1..vC");
      }
    }
    bool saw_row = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      const auto fields = split_line(line);
      if (fields.size() != header.size()) {
        line_error(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
      }
      ScoreFileRecord r;
      r.id = fields[0];
      r.true_label = static_cast<int>(parse_real(fields[1], lineno));
      for (std::size_t i = 0; i < expected_c; ++i) {
        r.values.push_back(parse_real(fields[2 + i], lineno));
      }
      r.is_logits = kind_is_logits(fields.back(), lineno);
      if (!saw_row) {
        expected_logits = r.is_logits;
        saw_row = true;
      }
      check_record(r, expected_c, expected_logits, lineno);
      records.push_back(std::move(r));
    }
  }
  if (records.empty()) throw std::invalid_argument("score file has no records");
  return records;
}

ExperimentConfig load_config_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");

  ExperimentConfig cfg;
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const auto& v = item.value();
    try {
      if (key == "mu") {
        cfg.mu = v.get<std::vector<double>>();
      } else if (key == "sigma") {
        cfg.sigma = v.get<double>();
      } else if (key == "n_per_class") {
        cfg.n_per_class = v.get<std::size_t>();
      } else if (key == "n_train") {
        cfg.n_train = v.get<std::size_t>();
      } else if (key == "splits") {
        cfg.splits = v.get<int>();
      } else if (key == "lr") {
        cfg.lr = v.get<double>();
      } else if (key == "epochs") {
        cfg.epochs = v.get<int>();
      } else if (key == "base_seed") {
        cfg.base_seed = v.get<std::uint64_t>();
      } else if (key == "init_scale") {
        cfg.init_scale = v.get<double>();
      } else if (key == "methods") {
        cfg.methods.clear();
        for (const auto& name : v.get<std::vector<std::string>>()) {
          cfg.methods.push_back(method_from_name(name));
        }
      } else if (key == "temperature") {
        cfg.temperature = v.get<double>();
      } else if (key == "epsilon") {
        cfg.epsilon = v.get<double>();
      } else if (key == "roc_mode") {
        cfg.roc_mode = roc_mode_from_name(v.get<std::string>());
      } else if (key == "resample_pool_per_split") {
        cfg.resample_pool_per_split = v.get<bool>();
      } else {
        throw std::invalid_argument("unknown key");
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config key '" + key + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config key '" + key + "': " + e.what());
    }
  }
  return cfg;
}

int cmd_synth(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const auto report = harness::run_experiment(cfg);
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir + "/report.json",
                  harness::emit_report(report, harness::ReportFormat::json));
  write_text_file(out_dir + "/report.csv",
                  harness::emit_report(report, harness::ReportFormat::csv));

  for (const auto& [m, items] : report.pooled) {
    const auto curve = (cfg.roc_mode == RocModeChoice::grid) ? metrics::roc_grid(items)
                                                             : metrics::roc_exact(items);
    std::string csv = "threshold,frr,trr\n";
    for (const auto& p : curve.points) {
      csv += fmt17(p.threshold);
      csv += ',';
      csv += fmt17(p.frr);
      csv += ',';
      csv += fmt17(p.trr);
      csv += '\n';
    }
    write_text_file(out_dir + "/roc_" + method_name(m) + ".csv", csv);
  }

  for (const auto& mm : report.aggregate.methods) {
    log << "eps0/eps1 at gamma=1 [" << method_name(mm.method)
        << "]: " << fmt17(mm.eps0_at_gamma1) << " / " << fmt17(mm.eps1_at_gamma1) << "\n";
  }
  log << "report written to " << out_dir << "\n";
  return 0;
}

namespace {

struct ScoredSet {
  std::vector<metrics::RejectionScoredItem> items;
  bool converted = false;
};

std::size_t argmax_index(const std::vector<double>& v) {
  return static_cast<std::size_t>(
      std::max_element(v.begin(), v.end()) - v.begin());
}

// Probability vector of a record at temperature T. Logit rows go through the
// stable softmax; probability rows are re-tempered via their logs only when
// T != 1. `converted` reports any such transformation.
scoring::SoftmaxVector record_probs(const ScoreFileRecord& r, double temperature,
                                    bool& converted) {
  if (r.is_logits) {
    converted = true;
    return scoring::softmax(r.values, temperature);
  }
  if (temperature == 1.0) return r.values;
  std::vector<double> logp(r.values.size());
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    logp[i] = std::log(std::max(r.values[i], 1e-300));
  }
  converted = true;
  return scoring::softmax(logp, temperature);
}

ScoredSet score_records(const std::vector<ScoreFileRecord>& records, MethodId method,
                        double temperature, const scoring::MahalanobisModel* mhl) {
  if (method == MethodId::d_star) {
    throw std::invalid_argument(
        "methods: d_star is defined by the synthetic benchmark's true model and cannot "
        "score external files");
  }
  if (method == MethodId::mhlnb && mhl == nullptr) {
    throw std::invalid_argument("fit-file: mhlnb requires --fit-file with training scores");
  }
  ScoredSet out;
  out.items.reserve(records.size());
  for (const auto& r : records) {
    metrics::RejectionScoredItem item;
    item.id = r.id;
    item.error_bit =
        (static_cast<std::size_t>(r.true_label) == argmax_index(r.values)) ? 0 : 1;
    switch (method) {
      case MethodId::d_alpha:
        item.rejection_score =
            scoring::doctor_alpha_score(record_probs(r, temperature, out.converted));
        break;
      case MethodId::d_beta:
        item.rejection_score =
            scoring::doctor_beta_score(record_probs(r, temperature, out.converted));
        break;
      case MethodId::sr:
        item.rejection_score =
            scoring::sr_rejection_score(record_probs(r, temperature, out.converted));
        break;
      case MethodId::odin: {
        scoring::LogitVector z;
        if (r.is_logits) {
          z = r.values;
        } else {
          out.converted = true;
          z.resize(r.values.size());
          for (std::size_t i = 0; i < r.values.size(); ++i) {
            z[i] = std::log(std::max(r.values[i], 1e-300));
          }
        }
        item.rejection_score = scoring::odin_rejection_score(z, temperature);
        break;
      }
      case MethodId::mhlnb:
        // Native vectors, exactly as fitted (logits file: logit space;
        // softmax file: probability space). Temperature does not apply.
        item.rejection_score = scoring::mahalanobis_score(*mhl, r.values);
        break;
      default:
        throw std::logic_error("unreachable");
    }
    out.items.push_back(std::move(item));
  }
  return out;
}

void require_both_error_classes(const std::vector<ScoreFileRecord>& records) {
  long long n1 = 0;
  for (const auto& r : records) {
    n1 += (static_cast<std::size_t>(r.true_label) == argmax_index(r.values)) ? 0 : 1;
  }
  if (n1 == 0 || n1 == static_cast<long long>(records.size())) {
    throw std::runtime_error(
        std::string("score file has a single E-class (every prediction is ") +
        (n1 == 0 ? "correct" : "wrong") + "); AUROC and type errors are undefined");
  }
}

scoring::MahalanobisModel fit_from_file(const std::string& fit_path,
                                        const std::vector<ScoreFileRecord>& records) {
  if (fit_path.empty()) {
    throw std::invalid_argument("fit-file: mhlnb requires --fit-file with training scores");
  }
  const auto fit_records = parse_score_file(read_text_file(fit_path));
  if (fit_records.front().values.size() != records.front().values.size() ||
      fit_records.front().is_logits != records.front().is_logits) {
    throw std::invalid_argument("fit-file: kind/class-count mismatch with the score file");
  }
  std::vector<std::vector<double>> vectors;
  std::vector<int> labels;
  vectors.reserve(fit_records.size());
  labels.reserve(fit_records.size());
  for (const auto& r : fit_records) {
    vectors.push_back(r.values);
    labels.push_back(r.true_label);
  }
  return scoring::mahalanobis_fit(vectors, labels);
}

void csv_metric(std::string& out, const std::string& method, const std::string& metric,
                double value) {
  out += method;
  out += ',';
  out += metric;
  out += ',';
  out += fmt17(value);
  out += '\n';
}

}  // namespace

EvalOptions::EvalOptions() : gamma(kNaN), delta(kNaN), zeta(kNaN) {}

int cmd_eval(const EvalOptions& opt, std::ostream& log) {
  if (opt.methods.empty()) throw std::invalid_argument("methods: at least one required");
  for (std::size_t i = 0; i < opt.methods.size(); ++i) {
    for (std::size_t j = i + 1; j < opt.methods.size(); ++j) {
      if (opt.methods[i] == opt.methods[j]) {
        throw std::invalid_argument("methods: duplicate entry '" +
                                    method_name(opt.methods[i]) + "'");
      }
    }
  }
  if (!(opt.temperature > 0.0)) {
    throw std::invalid_argument("temperature: must be positive");
  }

  const auto records = parse_score_file(read_text_file(opt.score_path));
  require_both_error_classes(records);

  scoring::MahalanobisModel mhl;
  bool have_mhl = false;
  if (std::find(opt.methods.begin(), opt.methods.end(), MethodId::mhlnb) !=
      opt.methods.end()) {
    mhl = fit_from_file(opt.fit_path, records);
    have_mhl = true;
  }

  const bool threshold_mode =
      !std::isnan(opt.gamma) || !std::isnan(opt.delta) || !std::isnan(opt.zeta);

  std::string csv = "method,metric,value\n";
  bool any_converted = false;
  for (MethodId m : opt.methods) {
    auto scored = score_records(records, m, opt.temperature, have_mhl ? &mhl : nullptr);
    any_converted = any_converted || scored.converted;
    const std::string name = method_name(m);

    if (threshold_mode) {
      // gamma/zeta threshold the canonical rejection score strictly; delta
      // keeps the native "reject iff max softmax <= delta" orientation.
      bool reject_at_tie = false;
      double threshold = kNaN;
      switch (m) {
        case MethodId::d_alpha:
        case MethodId::d_beta:
          if (std::isnan(opt.gamma)) throw std::invalid_argument("gamma: required for " + name);
          threshold = opt.gamma;
          break;
        case MethodId::sr:
        case MethodId::odin:
          if (std::isnan(opt.delta)) throw std::invalid_argument("delta: required for " + name);
          threshold = -opt.delta;
          reject_at_tie = true;
          break;
        case MethodId::mhlnb:
          if (std::isnan(opt.zeta)) throw std::invalid_argument("zeta: required for " + name);
          threshold = opt.zeta;
          break;
        default:
          throw std::logic_error("unreachable");
      }
      metrics::ConfusionCounts c;
      for (const auto& it : scored.items) {
        const bool reject = reject_at_tie ? it.rejection_score >= threshold
                                          : it.rejection_score > threshold;
        if (reject) {
          (it.error_bit ? c.TR : c.FR) += 1;
        } else {
          (it.error_bit ? c.FA : c.TA) += 1;
        }
      }
      const auto errs = metrics::type_errors(c);
      csv_metric(csv, name, "FR", static_cast<double>(c.FR));
      csv_metric(csv, name, "TR", static_cast<double>(c.TR));
      csv_metric(csv, name, "FA", static_cast<double>(c.FA));
      csv_metric(csv, name, "TA", static_cast<double>(c.TA));
      csv_metric(csv, name, "eps0", errs.first);
      csv_metric(csv, name, "eps1", errs.second);
      log << name << ": eps0 " << fmt17(errs.first) << ", eps1 " << fmt17(errs.second)
          << "\n";
    } else {
      const bool want_exact = opt.roc_mode != RocModeChoice::grid;
      const bool want_grid = opt.roc_mode != RocModeChoice::exact;
      metrics::RocCurve exact_curve, grid_curve;
      if (want_exact) {
        exact_curve = metrics::roc_exact(scored.items);
        csv_metric(csv, name, "auroc_exact", metrics::auroc(exact_curve));
      }
      if (want_grid) {
        grid_curve = metrics::roc_grid(scored.items);
        csv_metric(csv, name, "auroc_grid", metrics::auroc(grid_curve));
      }
      const auto fr = metrics::frr_at_trr(want_exact ? exact_curve : grid_curve, 0.95);
      csv_metric(csv, name, "frr_at_95_trr", fr.frr);
      csv_metric(csv, name, "frr_saturated", fr.saturated ? 1.0 : 0.0);
      log << name << ": metrics written\n";
    }
  }
  if (any_converted) {
    csv_metric(csv, "", "logits_converted", 1.0);
    log << "note: rows were converted between logit and probability space for some "
           "methods\n";
  }

  std::filesystem::create_directories(opt.out_dir);
  write_text_file(opt.out_dir + "/metrics.csv", csv);
  log << "metrics written to " << opt.out_dir << "/metrics.csv\n";
  return 0;
}

int cmd_hist(const HistOptions& opt, std::ostream& log) {
  if (opt.bins < 2) throw std::invalid_argument("bins: must be >= 2");

  std::vector<metrics::RejectionScoredItem> items;
  if (!opt.score_path.empty()) {
    const auto records = parse_score_file(read_text_file(opt.score_path));
    scoring::MahalanobisModel mhl;
    bool have_mhl = false;
    if (opt.method == MethodId::mhlnb) {
      mhl = fit_from_file(opt.fit_path, records);
      have_mhl = true;
    }
    items = score_records(records, opt.method, opt.temperature, have_mhl ? &mhl : nullptr)
                .items;
  } else {
    ExperimentConfig cfg = opt.synth_cfg;
    if (std::find(cfg.methods.begin(), cfg.methods.end(), opt.method) == cfg.methods.end()) {
      cfg.methods.push_back(opt.method);
    }
    const auto report = harness::run_experiment(cfg);
    for (const auto& [m, pooled] : report.pooled) {
      if (m == opt.method) items = pooled;
    }
  }
  if (items.empty()) throw std::runtime_error("no items to histogram");

  double lo = kInf, hi = -kInf;
  for (const auto& it : items) {
    if (std::isfinite(it.rejection_score)) {
      lo = std::min(lo, it.rejection_score);
      hi = std::max(hi, it.rejection_score);
    }
  }
  if (lo > hi) lo = hi = 0.0;  // every score infinite
  const double width = (hi - lo) / static_cast<double>(opt.bins);

  std::vector<long long> e0(static_cast<std::size_t>(opt.bins), 0);
  std::vector<long long> e1(static_cast<std::size_t>(opt.bins), 0);
  for (const auto& it : items) {
    std::size_t b;
    if (!std::isfinite(it.rejection_score)) {
      b = static_cast<std::size_t>(opt.bins) - 1;
    } else if (width <= 0.0) {
      b = 0;
    } else {
      b = std::min(static_cast<std::size_t>((it.rejection_score - lo) / width),
                   static_cast<std::size_t>(opt.bins) - 1);
    }
    (it.error_bit ? e1 : e0)[b] += 1;
  }

  std::string csv = "bin_lo,bin_hi,count_e0,count_e1\n";
  for (int b = 0; b < opt.bins; ++b) {
    csv += fmt17(lo + width * b);
    csv += ',';
    csv += fmt17(lo + width * (b + 1));
    csv += ',';
    csv += std::to_string(e0[static_cast<std::size_t>(b)]);
    csv += ',';
    csv += std::to_string(e1[static_cast<std::size_t>(b)]);
    csv += '\n';
  }
  std::filesystem::create_directories(opt.out_dir);
  const std::string path = opt.out_dir + "/hist_" + method_name(opt.method) + ".csv";
  write_text_file(path, csv);
  log << "histogram written to " << path << "\n";
  return 0;
}

}  // namespace doctor::cli
