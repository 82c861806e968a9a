#pragma once

#include <cstdint>
#include <vector>

#include "doctor/gaussian_model.hpp"
#include "doctor/scoring.hpp"

namespace doctor::trainer {

struct LogisticClassifier {
  std::vector<double> weights;
  double bias = 0.0;
  double temperature = 1.0;
};

// Weights start at zero by default; init_scale > 0 selects the stochastic
// variant where every parameter is drawn uniformly from
// [-init_scale, init_scale] using the seed.
struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 5;
  std::uint64_t seed = 0;
  double init_scale = 0.0;
};

// Full-batch gradient descent on mean binary cross-entropy of
// sigmoid(w.x + b); labels {-1,+1} map to targets {0,1}; exactly cfg.epochs
// update steps.
LogisticClassifier train(const std::vector<gaussian::LabeledSample>& train_set,
                         const TrainConfig& cfg);

// [P(-1|x), P(+1|x)] with P(+1|x) = sigmoid((w.x + b) / T).
scoring::SoftmaxVector posterior(const LogisticClassifier& c,
                                 const std::vector<double>& x, double temperature);
scoring::SoftmaxVector posterior(const LogisticClassifier& c,
                                 const std::vector<double>& x);

// +1 iff w.x + b > 0, else -1; independent of temperature.
int predict(const LogisticClassifier& c, const std::vector<double>& x);

double logit(const LogisticClassifier& c, const std::vector<double>& x);

// Mean -log p_y(x) in nats, probabilities clipped to [1e-12, 1 - 1e-12].
double ce_risk(const LogisticClassifier& c,
               const std::vector<gaussian::LabeledSample>& dataset);

}  // namespace doctor::trainer
