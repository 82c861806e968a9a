#include "doctor/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "doctor/perturb.hpp"
#include "doctor/rng.hpp"

namespace doctor {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string method_name(MethodId m) {
  switch (m) {
    case MethodId::d_star: return "d_star";
    case MethodId::d_alpha: return "d_alpha";
    case MethodId::d_beta: return "d_beta";
    case MethodId::sr: return "sr";
    case MethodId::odin: return "odin";
    case MethodId::mhlnb: return "mhlnb";
  }
  throw std::logic_error("unknown method");
}

MethodId method_from_name(const std::string& name) {
  if (name == "d_star") return MethodId::d_star;
  if (name == "d_alpha") return MethodId::d_alpha;
  if (name == "d_beta") return MethodId::d_beta;
  if (name == "sr") return MethodId::sr;
  if (name == "odin") return MethodId::odin;
  if (name == "mhlnb") return MethodId::mhlnb;
  throw std::invalid_argument("methods: unknown method '" + name + "'");
}

std::string roc_mode_name(RocModeChoice m) {
  switch (m) {
    case RocModeChoice::exact: return "exact";
    case RocModeChoice::grid: return "grid";
    case RocModeChoice::both: return "both";
  }
  throw std::logic_error("unknown roc mode");
}

RocModeChoice roc_mode_from_name(const std::string& name) {
  if (name == "exact") return RocModeChoice::exact;
  if (name == "grid") return RocModeChoice::grid;
  if (name == "both") return RocModeChoice::both;
  throw std::invalid_argument("roc_mode: expected exact, grid or both, got '" + name + "'");
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.mu.empty()) throw std::invalid_argument("mu: must have at least one dimension");
  for (double v : cfg.mu) {
    if (!std::isfinite(v)) throw std::invalid_argument("mu: entries must be finite");
  }
  if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) {
    throw std::invalid_argument("sigma: must be positive and finite");
  }
  if (cfg.n_per_class == 0) throw std::invalid_argument("n_per_class: must be >= 1");
  if (cfg.n_train == 0 || cfg.n_train >= 2 * cfg.n_per_class) {
    throw std::invalid_argument("n_train: must satisfy 1 <= n_train < 2 * n_per_class");
  }
  if (cfg.splits < 1) throw std::invalid_argument("splits: must be >= 1");
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) {
    throw std::invalid_argument("lr: must be positive and finite");
  }
  if (cfg.epochs < 1) throw std::invalid_argument("epochs: must be >= 1");
  if (cfg.init_scale < 0.0 || !std::isfinite(cfg.init_scale)) {
    throw std::invalid_argument("init_scale: must be >= 0 and finite");
  }
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) {
    throw std::invalid_argument("temperature: must be positive and finite");
  }
  if (cfg.epsilon < 0.0 || !std::isfinite(cfg.epsilon)) {
    throw std::invalid_argument("epsilon: must be >= 0 and finite");
  }
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.methods.size(); ++j) {
      if (cfg.methods[i] == cfg.methods[j]) {
        throw std::invalid_argument("methods: duplicate entry '" + method_name(cfg.methods[i]) + "'");
      }
    }
  }
  if (cfg.epsilon > 0.0 &&
      std::find(cfg.methods.begin(), cfg.methods.end(), MethodId::sr) != cfg.methods.end()) {
    throw std::invalid_argument("epsilon: sr has no gradient; perturbation requires epsilon = 0");
  }
}

}  // namespace doctor

namespace doctor::harness {

MethodMetrics::MethodMetrics()
    : auroc_exact(kNaN),
      auroc_grid(kNaN),
      frr_at_95_trr(kNaN),
      eps0_at_gamma1(kNaN),
      eps1_at_gamma1(kNaN) {}

std::vector<metrics::RejectionScoredItem> score_dataset(
    const gaussian::GaussianBinaryModel& model,
    const trainer::LogisticClassifier& classifier,
    const std::vector<gaussian::LabeledSample>& test_set, MethodId method,
    double temperature, double epsilon, const scoring::MahalanobisModel* mhl) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be >= 0");
  if (method == MethodId::sr && epsilon > 0.0) {
    throw std::invalid_argument("sr has no gradient; epsilon must be 0");
  }
  if (method == MethodId::mhlnb && mhl == nullptr) {
    throw std::invalid_argument("mhlnb scoring requires a fitted Mahalanobis model");
  }

  perturb::PerturbSpec spec;
  spec.epsilon = epsilon;
  spec.temperature = temperature;
  bool perturbable = false;
  switch (method) {
    case MethodId::d_alpha: spec.method = perturb::Method::alpha; perturbable = true; break;
    case MethodId::d_beta: spec.method = perturb::Method::beta; perturbable = true; break;
    case MethodId::odin: spec.method = perturb::Method::odin; perturbable = true; break;
    case MethodId::mhlnb: spec.method = perturb::Method::mahalanobis; perturbable = true; break;
    default: break;
  }

  std::vector<metrics::RejectionScoredItem> items;
  items.reserve(test_set.size());
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto& sample = test_set[i];
    const int pred = trainer::predict(classifier, sample.x);
    metrics::RejectionScoredItem item;
    item.id = std::to_string(i);
    item.error_bit = (pred == sample.y) ? 0 : 1;

    if (method == MethodId::d_star) {
      item.rejection_score = gaussian::optimal_score(model, pred, sample.x);
    } else {
      std::vector<double> xt = (perturbable && epsilon > 0.0)
                                   ? perturb::preprocess(sample.x, spec, classifier, mhl)
                                   : sample.x;
      const scoring::SoftmaxVector p = trainer::posterior(classifier, xt, temperature);
      switch (method) {
        case MethodId::d_alpha: item.rejection_score = scoring::doctor_alpha_score(p); break;
        case MethodId::d_beta: item.rejection_score = scoring::doctor_beta_score(p); break;
        case MethodId::sr: item.rejection_score = scoring::sr_rejection_score(p); break;
        case MethodId::odin: {
          const scoring::LogitVector z{0.0, trainer::logit(classifier, xt)};
          item.rejection_score = scoring::odin_rejection_score(z, temperature);
          break;
        }
        case MethodId::mhlnb: item.rejection_score = scoring::mahalanobis_score(*mhl, p); break;
        default: throw std::logic_error("unreachable");
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

namespace {

struct SplitPieces {
  gaussian::SplitDataset data;
  trainer::LogisticClassifier classifier;
};

SplitPieces prepare_split(const ExperimentConfig& cfg,
                          const gaussian::GaussianBinaryModel& model,
                          const std::vector<gaussian::LabeledSample>& fixed_pool, int i) {
  SplitPieces out;
  const auto idx = static_cast<std::uint64_t>(i);
  if (cfg.resample_pool_per_split) {
    const auto pool = gaussian::sample_pool(
        model, cfg.n_per_class, mix_seed(cfg.base_seed, static_cast<std::uint64_t>(cfg.splits) + idx));
    out.data = gaussian::split(pool, cfg.n_train, cfg.base_seed + idx);
  } else {
    out.data = gaussian::split(fixed_pool, cfg.n_train, cfg.base_seed + idx);
  }
  trainer::TrainConfig tc;
  tc.learning_rate = cfg.lr;
  tc.epochs = cfg.epochs;
  tc.seed = mix_seed(cfg.base_seed, idx);
  tc.init_scale = cfg.init_scale;
  out.classifier = trainer::train(out.data.train, tc);
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const gaussian::GaussianBinaryModel model{cfg.mu, cfg.sigma};
  const std::vector<double> etas{0.5, 0.2, 0.1};

  ExperimentReport report;
  report.config = cfg;
  for (MethodId m : cfg.methods) report.pooled.emplace_back(m, std::vector<metrics::RejectionScoredItem>{});

  std::vector<gaussian::LabeledSample> fixed_pool;
  if (!cfg.resample_pool_per_split) {
    fixed_pool = gaussian::sample_pool(model, cfg.n_per_class, cfg.base_seed);
  }

  for (int i = 0; i < cfg.splits; ++i) {
    const SplitPieces sp = prepare_split(cfg, model, fixed_pool, i);
    const auto& test = sp.data.test;
    const double n = static_cast<double>(test.size());

    SplitResult res;
    res.split_index = i;

    long long correct = 0, bayes_correct = 0;
    for (const auto& s : test) {
      correct += trainer::predict(sp.classifier, s.x) == s.y;
      bayes_correct += gaussian::bayes_classify(model, s.x) == s.y;
    }
    res.trained_accuracy = static_cast<double>(correct) / n;
    res.bayes_accuracy = static_cast<double>(bayes_correct) / n;
    res.ce_risk = trainer::ce_risk(sp.classifier, test);

    std::vector<double> deltas;
    deltas.reserve(test.size());
    for (const auto& s : test) {
      deltas.push_back(gaussian::kl_delta(model, trainer::posterior(sp.classifier, s.x, 1.0), s.x));
    }
    for (double eta : etas) {
      MarkovCheck mc;
      mc.eta = eta;
      mc.bound = gaussian::markov_epsilon(res.ce_risk, eta);
      long long over = 0;
      for (double d : deltas) over += d >= mc.bound;
      mc.fraction = static_cast<double>(over) / n;
      mc.holds = mc.fraction <= eta;
      res.markov.push_back(mc);
    }

    scoring::MahalanobisModel mhl;
    bool have_mhl = false;
    if (std::find(cfg.methods.begin(), cfg.methods.end(), MethodId::mhlnb) != cfg.methods.end()) {
      std::vector<std::vector<double>> vecs;
      std::vector<int> labels;
      vecs.reserve(sp.data.train.size());
      labels.reserve(sp.data.train.size());
      for (const auto& s : sp.data.train) {
        vecs.push_back(trainer::posterior(sp.classifier, s.x, cfg.temperature));
        labels.push_back(gaussian::label_to_index(s.y));
      }
      mhl = scoring::mahalanobis_fit(vecs, labels);
      have_mhl = true;
    }

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const MethodId m = cfg.methods[mi];
      auto items = score_dataset(model, sp.classifier, test, m, cfg.temperature, cfg.epsilon,
                                 have_mhl ? &mhl : nullptr);

      MethodMetrics mm;
      mm.method = m;
      const auto errs = metrics::type_errors(metrics::confusion(items, 1.0));
      mm.eps0_at_gamma1 = errs.first;
      mm.eps1_at_gamma1 = errs.second;

      const bool want_exact = cfg.roc_mode != RocModeChoice::grid;
      const bool want_grid = cfg.roc_mode != RocModeChoice::exact;
      metrics::RocCurve exact_curve, grid_curve;
      if (want_exact) {
        exact_curve = metrics::roc_exact(items);
        mm.auroc_exact = metrics::auroc(exact_curve);
      }
      if (want_grid) {
        grid_curve = metrics::roc_grid(items);
        mm.auroc_grid = metrics::auroc(grid_curve);
        mm.grid_degenerate = grid_curve.degenerate_fallback;
      }
      const auto fr = metrics::frr_at_trr(want_exact ? exact_curve : grid_curve, 0.95);
      mm.frr_at_95_trr = fr.frr;
      mm.frr_saturated = fr.saturated;
      res.methods.push_back(mm);

      auto& pool_items = report.pooled[mi].second;
      pool_items.reserve(pool_items.size() + items.size());
      for (auto& it : items) {
        it.id = std::to_string(i) + ":" + it.id;
        pool_items.push_back(std::move(it));
      }
    }
    report.per_split.push_back(std::move(res));
  }

  Aggregate agg;
  agg.splits = cfg.splits;
  const double k = static_cast<double>(cfg.splits);
  for (const auto& res : report.per_split) {
    agg.trained_accuracy += res.trained_accuracy / k;
    agg.bayes_accuracy += res.bayes_accuracy / k;
    agg.ce_risk += res.ce_risk / k;
  }
  for (std::size_t j = 0; j < etas.size(); ++j) {
    MarkovCheck mc;
    mc.eta = etas[j];
    for (const auto& res : report.per_split) {
      mc.bound += res.markov[j].bound / k;
      mc.fraction += res.markov[j].fraction / k;
    }
    mc.holds = mc.fraction <= mc.eta;
    agg.markov.push_back(mc);
  }
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    MethodMetrics mm;
    mm.method = cfg.methods[mi];
    mm.auroc_exact = 0.0;
    mm.auroc_grid = 0.0;
    mm.frr_at_95_trr = 0.0;
    mm.eps0_at_gamma1 = 0.0;
    mm.eps1_at_gamma1 = 0.0;
    for (const auto& res : report.per_split) {
      const MethodMetrics& s = res.methods[mi];
      mm.auroc_exact += s.auroc_exact / k;
      mm.auroc_grid += s.auroc_grid / k;
      mm.frr_at_95_trr += s.frr_at_95_trr / k;
      mm.eps0_at_gamma1 += s.eps0_at_gamma1 / k;
      mm.eps1_at_gamma1 += s.eps1_at_gamma1 / k;
      mm.grid_degenerate = mm.grid_degenerate || s.grid_degenerate;
      mm.frr_saturated = mm.frr_saturated || s.frr_saturated;
    }
    agg.methods.push_back(mm);
  }
  report.aggregate = std::move(agg);
  return report;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json markov_json(const std::vector<MarkovCheck>& checks) {
  ordered_json arr = ordered_json::array();
  for (const auto& mc : checks) {
    arr.push_back({{"eta", mc.eta},
                   {"bound", mc.bound},
                   {"fraction", mc.fraction},
                   {"holds", mc.holds}});
  }
  return arr;
}

ordered_json methods_json(const std::vector<MethodMetrics>& methods) {
  ordered_json arr = ordered_json::array();
  for (const auto& mm : methods) {
    ordered_json j;
    j["method"] = method_name(mm.method);
    if (!std::isnan(mm.auroc_exact)) j["auroc_exact"] = mm.auroc_exact;
    if (!std::isnan(mm.auroc_grid)) {
      j["auroc_grid"] = mm.auroc_grid;
      j["grid_degenerate"] = mm.grid_degenerate;
    }
    j["frr_at_95_trr"] = mm.frr_at_95_trr;
    j["frr_saturated"] = mm.frr_saturated;
    j["eps0_at_gamma1"] = mm.eps0_at_gamma1;
    j["eps1_at_gamma1"] = mm.eps1_at_gamma1;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void csv_row(std::string& out, const std::string& split, const std::string& method,
             const std::string& metric, double value) {
  out += split;
  out += ',';
  out += method;
  out += ',';
  out += metric;
  out += ',';
  out += fmt17(value);
  out += '\n';
}

void csv_section(std::string& out, const std::string& split_label, double trained,
                 double bayes, double ce, const std::vector<MarkovCheck>& markov,
                 const std::vector<MethodMetrics>& methods) {
  csv_row(out, split_label, "", "trained_accuracy", trained);
  csv_row(out, split_label, "", "bayes_accuracy", bayes);
  csv_row(out, split_label, "", "ce_risk", ce);
  for (const auto& mc : markov) {
    char name[64];
    std::snprintf(name, sizeof(name), "markov_bound_%g", mc.eta);
    csv_row(out, split_label, "", name, mc.bound);
    std::snprintf(name, sizeof(name), "markov_fraction_%g", mc.eta);
    csv_row(out, split_label, "", name, mc.fraction);
  }
  for (const auto& mm : methods) {
    const std::string m = method_name(mm.method);
    if (!std::isnan(mm.auroc_exact)) csv_row(out, split_label, m, "auroc_exact", mm.auroc_exact);
    if (!std::isnan(mm.auroc_grid)) csv_row(out, split_label, m, "auroc_grid", mm.auroc_grid);
    csv_row(out, split_label, m, "frr_at_95_trr", mm.frr_at_95_trr);
    csv_row(out, split_label, m, "eps0_at_gamma1", mm.eps0_at_gamma1);
    csv_row(out, split_label, m, "eps1_at_gamma1", mm.eps1_at_gamma1);
  }
}

}  // namespace

std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    const auto& cfg = report.config;
    ordered_json j;
    j["schema_version"] = "1";
    ordered_json jc;
    jc["mu"] = cfg.mu;
    jc["sigma"] = cfg.sigma;
    jc["n_per_class"] = cfg.n_per_class;
    jc["n_train"] = cfg.n_train;
    jc["splits"] = cfg.splits;
    jc["lr"] = cfg.lr;
    jc["epochs"] = cfg.epochs;
    jc["base_seed"] = cfg.base_seed;
    jc["init_scale"] = cfg.init_scale;
    ordered_json names = ordered_json::array();
    for (MethodId m : cfg.methods) names.push_back(method_name(m));
    jc["methods"] = std::move(names);
    jc["temperature"] = cfg.temperature;
    jc["epsilon"] = cfg.epsilon;
    jc["roc_mode"] = roc_mode_name(cfg.roc_mode);
    jc["resample_pool_per_split"] = cfg.resample_pool_per_split;
    j["config"] = std::move(jc);

    ordered_json splits = ordered_json::array();
    for (const auto& res : report.per_split) {
      ordered_json js;
      js["split"] = res.split_index;
      js["trained_accuracy"] = res.trained_accuracy;
      js["bayes_accuracy"] = res.bayes_accuracy;
      js["ce_risk"] = res.ce_risk;
      js["markov"] = markov_json(res.markov);
      js["methods"] = methods_json(res.methods);
      splits.push_back(std::move(js));
    }
    j["per_split"] = std::move(splits);

    ordered_json ja;
    ja["splits"] = report.aggregate.splits;
    ja["trained_accuracy"] = report.aggregate.trained_accuracy;
    ja["bayes_accuracy"] = report.aggregate.bayes_accuracy;
    ja["ce_risk"] = report.aggregate.ce_risk;
    ja["markov"] = markov_json(report.aggregate.markov);
    ja["methods"] = methods_json(report.aggregate.methods);
    j["aggregate"] = std::move(ja);
    return j.dump(2) + "\n";
  }

  std::string out = "split,method,metric,value\n";
  for (const auto& res : report.per_split) {
    csv_section(out, std::to_string(res.split_index), res.trained_accuracy, res.bayes_accuracy,
                res.ce_risk, res.markov, res.methods);
  }
  csv_section(out, "aggregate", report.aggregate.trained_accuracy,
              report.aggregate.bayes_accuracy, report.aggregate.ce_risk,
              report.aggregate.markov, report.aggregate.methods);
  return out;
}

}  // namespace doctor::harness

namespace doctor::metrics {

Prop1Result prop1_monte_carlo(const ExperimentConfig& cfg, double gamma) {
  validate(cfg);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const gaussian::GaussianBinaryModel model{cfg.mu, cfg.sigma};

  std::vector<gaussian::LabeledSample> fixed_pool;
  if (!cfg.resample_pool_per_split) {
    fixed_pool = gaussian::sample_pool(model, cfg.n_per_class, cfg.base_seed);
  }

  Prop1Result result;
  const double k = static_cast<double>(cfg.splits);
  for (int i = 0; i < cfg.splits; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    gaussian::SplitDataset sd;
    if (cfg.resample_pool_per_split) {
      const auto pool = gaussian::sample_pool(
          model, cfg.n_per_class,
          mix_seed(cfg.base_seed, static_cast<std::uint64_t>(cfg.splits) + idx));
      sd = gaussian::split(pool, cfg.n_train, cfg.base_seed + idx);
    } else {
      sd = gaussian::split(fixed_pool, cfg.n_train, cfg.base_seed + idx);
    }
    trainer::TrainConfig tc;
    tc.learning_rate = cfg.lr;
    tc.epochs = cfg.epochs;
    tc.seed = mix_seed(cfg.base_seed, idx);
    tc.init_scale = cfg.init_scale;
    const auto clf = trainer::train(sd.train, tc);

    const auto items =
        harness::score_dataset(model, clf, sd.test, MethodId::d_star, 1.0, 0.0);
    const auto errs = type_errors(confusion(items, gamma));
    result.per_split.emplace_back(errs.first, errs.second);
    result.eps0_avg += errs.first / k;
    result.eps1_avg += errs.second / k;
  }
  return result;
}

}  // namespace doctor::metrics
