#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "doctor/cli_io.hpp"
#include "doctor/experiment_config.hpp"

namespace {

std::vector<doctor::MethodId> parse_methods(const std::vector<std::string>& names) {
  std::vector<doctor::MethodId> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(doctor::method_from_name(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Selective-prediction benchmark: DOCTOR-style discriminators, SR/ODIN/Mahalanobis "
      "baselines, ROC metrics, and a synthetic two-Gaussian world"};
  app.require_subcommand(1);

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Run the synthetic benchmark end to end");
  std::string s_config, s_roc_mode, s_out_dir = ".";
  std::vector<double> s_mu;
  std::vector<std::string> s_methods;
  double s_sigma = 2.0, s_lr = 0.1, s_init_scale = 0.0, s_temperature = 1.0, s_epsilon = 0.0;
  std::uint64_t s_n_per_class = 0, s_n_train = 0, s_seed = 0;
  int s_splits = 0, s_epochs = 0;
  bool s_resample = false;
  auto* so_config =
      synth->add_option("--config", s_config, "JSON config file (flags override it)")
          ->check(CLI::ExistingFile);
  auto* so_mu = synth->add_option("--mu", s_mu, "class mean vector (classes at +mu/-mu)");
  auto* so_sigma =
      synth->add_option("--sigma", s_sigma, "noise scale")->envname("DOCTOR_SIGMA");
  auto* so_npc = synth->add_option("--n-per-class", s_n_per_class, "pool samples per class");
  auto* so_ntrain = synth->add_option("--n-train", s_n_train, "training samples per split");
  auto* so_splits = synth->add_option("--splits", s_splits, "number of random splits");
  auto* so_lr = synth->add_option("--lr", s_lr, "learning rate");
  auto* so_epochs = synth->add_option("--epochs", s_epochs, "gradient-descent steps");
  auto* so_seed = synth->add_option("--seed", s_seed, "base seed")->envname("DOCTOR_SEED");
  auto* so_init = synth->add_option("--init-scale", s_init_scale,
                                    "uniform weight-init half-width (0 = zero init)");
  auto* so_methods = synth->add_option("--methods", s_methods,
                                       "methods: d_star d_alpha d_beta sr odin mhlnb");
  auto* so_temp = synth->add_option("--temperature", s_temperature, "softmax temperature")
                      ->envname("DOCTOR_TEMPERATURE");
  auto* so_eps = synth->add_option("--epsilon", s_epsilon, "input-perturbation magnitude")
                     ->envname("DOCTOR_EPSILON");
  auto* so_roc = synth->add_option("--roc-mode", s_roc_mode, "exact, grid or both")
                     ->envname("DOCTOR_ROC_MODE");
  auto* so_resample = synth->add_flag("--resample-pool", s_resample,
                                      "draw a fresh pool per split");
  synth->add_option("--out-dir", s_out_dir, "output directory")->envname("DOCTOR_OUT_DIR");

  // ---- eval -----------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Score an external softmax/logits file");
  doctor::cli::EvalOptions ev;
  std::vector<std::string> e_methods;
  std::string e_roc_mode;
  eval->add_option("--file", ev.score_path, "score file (CSV or JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--fit-file", ev.fit_path, "training scores for mhlnb")
      ->check(CLI::ExistingFile);
  auto* eo_methods =
      eval->add_option("--methods", e_methods, "methods: d_alpha d_beta sr odin mhlnb");
  eval->add_option("--temperature", ev.temperature, "softmax temperature")
      ->envname("DOCTOR_TEMPERATURE");
  eval->add_option("--gamma", ev.gamma, "DOCTOR threshold (reject iff score > gamma)");
  eval->add_option("--delta", ev.delta, "SR/ODIN threshold (reject iff max softmax <= delta)");
  eval->add_option("--zeta", ev.zeta, "Mahalanobis threshold (reject iff M > zeta)");
  auto* eo_roc = eval->add_option("--roc-mode", e_roc_mode, "exact, grid or both")
                     ->envname("DOCTOR_ROC_MODE");
  eval->add_option("--out-dir", ev.out_dir, "output directory")->envname("DOCTOR_OUT_DIR");

  // ---- hist -----------------------------------------------------------
  auto* hist = app.add_subcommand("hist", "Emit a rejection-score histogram");
  doctor::cli::HistOptions hi;
  std::string h_config, h_method = "d_beta";
  double h_sigma = 2.0;
  std::uint64_t h_seed = 0;
  hist->add_option("--file", hi.score_path, "score file; omit to use the synthetic benchmark")
      ->check(CLI::ExistingFile);
  hist->add_option("--fit-file", hi.fit_path, "training scores for mhlnb")
      ->check(CLI::ExistingFile);
  auto* ho_config = hist->add_option("--config", h_config, "synthetic-benchmark JSON config")
                        ->check(CLI::ExistingFile);
  auto* ho_sigma =
      hist->add_option("--sigma", h_sigma, "noise scale")->envname("DOCTOR_SIGMA");
  auto* ho_seed = hist->add_option("--seed", h_seed, "base seed")->envname("DOCTOR_SEED");
  hist->add_option("--method", h_method, "method to histogram");
  hist->add_option("--bins", hi.bins, "number of bins");
  auto* ho_temp = hist->add_option("--temperature", hi.temperature, "softmax temperature")
                      ->envname("DOCTOR_TEMPERATURE");
  hist->add_option("--out-dir", hi.out_dir, "output directory")->envname("DOCTOR_OUT_DIR");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      doctor::ExperimentConfig cfg;
      if (so_config->count()) cfg = doctor::cli::load_config_file(s_config);
      if (so_mu->count()) cfg.mu = s_mu;
      if (so_sigma->count()) cfg.sigma = s_sigma;
      if (so_npc->count()) cfg.n_per_class = s_n_per_class;
      if (so_ntrain->count()) cfg.n_train = s_n_train;
      if (so_splits->count()) cfg.splits = s_splits;
      if (so_lr->count()) cfg.lr = s_lr;
      if (so_epochs->count()) cfg.epochs = s_epochs;
      if (so_seed->count()) cfg.base_seed = s_seed;
      if (so_init->count()) cfg.init_scale = s_init_scale;
      if (so_methods->count()) cfg.methods = parse_methods(s_methods);
      if (so_temp->count()) cfg.temperature = s_temperature;
      if (so_eps->count()) cfg.epsilon = s_epsilon;
      if (so_roc->count()) cfg.roc_mode = doctor::roc_mode_from_name(s_roc_mode);
      if (so_resample->count()) cfg.resample_pool_per_split = s_resample;
      return doctor::cli::cmd_synth(cfg, s_out_dir, std::cout);
    }
    if (eval->parsed()) {
      if (eo_methods->count()) ev.methods = parse_methods(e_methods);
      if (eo_roc->count()) ev.roc_mode = doctor::roc_mode_from_name(e_roc_mode);
      return doctor::cli::cmd_eval(ev, std::cout);
    }
    if (hist->parsed()) {
      if (ho_config->count()) hi.synth_cfg = doctor::cli::load_config_file(h_config);
      if (ho_sigma->count()) hi.synth_cfg.sigma = h_sigma;
      if (ho_seed->count()) hi.synth_cfg.base_seed = h_seed;
      if (ho_temp->count()) hi.synth_cfg.temperature = hi.temperature;
      hi.method = doctor::method_from_name(h_method);
      return doctor::cli::cmd_hist(hi, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
