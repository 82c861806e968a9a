#pragma once

#include <cstdint>
#include <vector>

#include "doctor/scoring.hpp"

namespace doctor::gaussian {

// The fully known generative world: X ~ N(y * mu, sigma^2 I) with
// y uniform on {-1, +1}. Class -1 has mean -mu.
struct GaussianBinaryModel {
  std::vector<double> mu;
  double sigma = 2.0;
};

// Label y lives in {-1, +1}; the scoring boundary maps -1 to class index 0
// and +1 to class index 1.
struct LabeledSample {
  std::vector<double> x;
  int y = 1;
};

inline int label_to_index(int y) { return y > 0 ? 1 : 0; }

struct SplitDataset {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  std::uint64_t seed = 0;
};

// Exactly n_per_class samples per class, class -1 block first; deterministic
// given seed.
std::vector<LabeledSample> sample_pool(const GaussianBinaryModel& model,
                                       std::size_t n_per_class, std::uint64_t seed);

// Uniformly random permutation split into n_train / (pool - n_train).
SplitDataset split(const std::vector<LabeledSample>& pool, std::size_t n_train,
                   std::uint64_t seed);

// Bayes classifier sign(x . mu), tie -> +1.
int bayes_classify(const GaussianBinaryModel& model, const std::vector<double>& x);

// True posterior [P(-1|x), P(+1|x)], P(+1|x) = sigmoid(2 x.mu / sigma^2).
scoring::SoftmaxVector true_posterior(const GaussianBinaryModel& model,
                                      const std::vector<double>& x);

// Probability that the given prediction is wrong, 1 - P(predicted | x).
double true_pe(const GaussianBinaryModel& model, int predicted_label,
               const std::vector<double>& x);

// Optimal discriminator statistic: density ratio
//   N(x; -f mu, sigma^2 I) / N(x; f mu, sigma^2 I) = exp(-2 f (x.mu) / sigma^2),
// the odds of error of the prediction f. Reject iff score > gamma.
double optimal_score(const GaussianBinaryModel& model, int predicted_label,
                     const std::vector<double>& x);

// Delta(x) = 2 sqrt(2 KL(q || q_hat)) in nats, between the true posterior at x
// and the classifier posterior (both over {-1,+1}, given by their +1 entry).
double kl_delta(const GaussianBinaryModel& model,
                const scoring::SoftmaxVector& classifier_posterior,
                const std::vector<double>& x);

// Threshold 2 sqrt(2 risk / eta) from the Markov bound on Delta(x).
double markov_epsilon(double cross_entropy_risk, double eta);

// Numeric quadrature over the d=2 plane for a linear classifier
// sign(w.x + b) (tie -> -1; w = 0 gives the constant classifier sign(b)).
// tv is the total variation distance between the error-conditional densities
// p_{X|E=1} and p_{X|E=0}; error_rate is P(E=1); mixture_mass is the
// self-check integral of p_X (must be 1 within 1e-4 or the call throws).
struct QuadratureResult {
  double tv = 0.0;
  double error_rate = 0.0;
  double mixture_mass = 0.0;
};

QuadratureResult error_quadrature(const GaussianBinaryModel& model,
                                  const std::vector<double>& w, double b);

double tv_distance_numeric(const GaussianBinaryModel& model,
                           const std::vector<double>& w, double b);

}  // namespace doctor::gaussian
