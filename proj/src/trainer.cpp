#include "doctor/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctor/rng.hpp"

namespace doctor::trainer {

namespace {

double stable_sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

}  // namespace

LogisticClassifier train(const std::vector<gaussian::LabeledSample>& train_set,
                         const TrainConfig& cfg) {
  if (train_set.empty()) throw std::invalid_argument("empty train set");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  const std::size_t d = train_set.front().x.size();
  for (const auto& s : train_set) {
    if (s.x.size() != d) throw std::invalid_argument("inconsistent feature dimension");
    if (s.y != -1 && s.y != +1) throw std::invalid_argument("labels must be -1 or +1");
  }

  LogisticClassifier c;
  c.weights.assign(d, 0.0);
  if (cfg.init_scale > 0.0) {
    Rng rng(cfg.seed);
    for (double& w : c.weights) w = rng.uniform(-cfg.init_scale, cfg.init_scale);
    c.bias = rng.uniform(-cfg.init_scale, cfg.init_scale);
  }

  const double n = static_cast<double>(train_set.size());
  std::vector<double> grad_w(d);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    double grad_b = 0.0;
    for (const auto& s : train_set) {
      const double p = stable_sigmoid(logit(c, s.x));
      const double target = s.y > 0 ? 1.0 : 0.0;
      const double g = p - target;
      for (std::size_t j = 0; j < d; ++j) grad_w[j] += g * s.x[j];
      grad_b += g;
    }
    for (std::size_t j = 0; j < d; ++j) c.weights[j] -= cfg.learning_rate * grad_w[j] / n;
    c.bias -= cfg.learning_rate * grad_b / n;
  }
  return c;
}

scoring::SoftmaxVector posterior(const LogisticClassifier& c,
                                 const std::vector<double>& x, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const double p_plus = stable_sigmoid(logit(c, x) / temperature);
  return {1.0 - p_plus, p_plus};
}

scoring::SoftmaxVector posterior(const LogisticClassifier& c, const std::vector<double>& x) {
  return posterior(c, x, c.temperature);
}

int predict(const LogisticClassifier& c, const std::vector<double>& x) {
  return logit(c, x) > 0.0 ? +1 : -1;
}

double logit(const LogisticClassifier& c, const std::vector<double>& x) {
  if (x.size() != c.weights.size()) throw std::invalid_argument("dimension mismatch");
  return std::inner_product(x.begin(), x.end(), c.weights.begin(), c.bias);
}

double ce_risk(const LogisticClassifier& c,
               const std::vector<gaussian::LabeledSample>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  double total = 0.0;
  for (const auto& s : dataset) {
    const double p_y = posterior(c, s.x)[gaussian::label_to_index(s.y)];
    total += -std::log(std::clamp(p_y, 1e-12, 1.0 - 1e-12));
  }
  return total / static_cast<double>(dataset.size());
}

}  // namespace doctor::trainer
