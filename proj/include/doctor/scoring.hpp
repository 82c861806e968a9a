#pragma once

#include <Eigen/Dense>
#include <vector>

namespace doctor::scoring {

// A probability distribution over C >= 2 classes. Entries must lie in [0,1]
// and sum to 1 within 1e-9; validate_softmax enforces this.
using SoftmaxVector = std::vector<double>;
using LogitVector = std::vector<double>;

void validate_softmax(const SoftmaxVector& p);

// Stable softmax (max-logit subtraction) at temperature T.
SoftmaxVector softmax(const LogitVector& z, double temperature = 1.0);

// Gini statistic g = sum of squared probabilities; 1 - g is the soft
// self-error statistic.
double g_hat(const SoftmaxVector& p);

// Soft error probability 1 - max_y p_y.
double pe_hat(const SoftmaxVector& p);

// DOCTOR discriminators. Both are canonical rejection scores:
// reject iff score > gamma (strict; ties accept).
double doctor_alpha_score(const SoftmaxVector& p);  // (1 - g) / g
double doctor_beta_score(const SoftmaxVector& p);   // pe_hat / (1 - pe_hat); +inf on one-hot

// Softmax response: the raw statistic is max_y p_y with "reject iff <= delta".
// sr_rejection_score negates it into the canonical "reject iff > threshold"
// orientation used by the ROC engine.
double sr_score(const SoftmaxVector& p);
double sr_rejection_score(const SoftmaxVector& p);

// ODIN statistic max softmax(z / T); reject iff <= delta.
double odin_score(const LogitVector& z, double temperature);
double odin_rejection_score(const LogitVector& z, double temperature);

struct MahalanobisModel {
  std::vector<Eigen::VectorXd> class_means;
  Eigen::MatrixXd shared_covariance;
  Eigen::MatrixXd inverse_covariance;
};

// Per-class means and pooled covariance (normalized by n). A ridge
// 1e-6 * trace/k is added before inversion (1e-6 absolute when the pooled
// scatter is exactly zero); pass ridge=false only for algebraic tests.
MahalanobisModel mahalanobis_fit(const std::vector<std::vector<double>>& vectors,
                                 const std::vector<int>& labels, bool ridge = true);

// M(v) = max_c -(v - mu_c)^T Sigma^-1 (v - mu_c); canonical rejection score,
// reject iff M > zeta.
double mahalanobis_score(const MahalanobisModel& m, const std::vector<double>& v);

}  // namespace doctor::scoring
