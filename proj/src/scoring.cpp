#include "doctor/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace doctor::scoring {

void validate_softmax(const SoftmaxVector& p) {
  if (p.size() < 2) {
    throw std::invalid_argument("softmax vector needs at least two classes");
  }
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < -1e-12 || v > 1.0 + 1e-12) {
      throw std::invalid_argument("softmax entry outside [0,1]: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("softmax entries sum to " + std::to_string(sum));
  }
}

SoftmaxVector softmax(const LogitVector& z, double temperature) {
  if (temperature <= 0.0) {
    throw std::invalid_argument("temperature must be positive");
  }
  if (z.size() < 2) {
    throw std::invalid_argument("logit vector needs at least two classes");
  }
  for (double v : z) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite logit");
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  SoftmaxVector p(z.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - zmax) / temperature);
    denom += p[i];
  }
  for (double& v : p) v /= denom;
  return p;
}

double g_hat(const SoftmaxVector& p) {
  validate_softmax(p);
  double g = 0.0;
  for (double v : p) g += v * v;
  return g;
}

double pe_hat(const SoftmaxVector& p) {
  validate_softmax(p);
  return 1.0 - *std::max_element(p.begin(), p.end());
}

double doctor_alpha_score(const SoftmaxVector& p) {
  const double g = g_hat(p);
  return (1.0 - g) / g;
}

double doctor_beta_score(const SoftmaxVector& p) {
  const double pe = pe_hat(p);
  if (pe >= 1.0) throw std::invalid_argument("degenerate soft error probability 1");
  if (pe == 0.0) return std::numeric_limits<double>::infinity();
  return pe / (1.0 - pe);
}

double sr_score(const SoftmaxVector& p) {
  validate_softmax(p);
  return *std::max_element(p.begin(), p.end());
}

double sr_rejection_score(const SoftmaxVector& p) { return -sr_score(p); }

double odin_score(const LogitVector& z, double temperature) {
  const SoftmaxVector p = softmax(z, temperature);
  return *std::max_element(p.begin(), p.end());
}

double odin_rejection_score(const LogitVector& z, double temperature) {
  return -odin_score(z, temperature);
}

MahalanobisModel mahalanobis_fit(const std::vector<std::vector<double>>& vectors,
                                 const std::vector<int>& labels, bool ridge) {
  if (vectors.empty() || vectors.size() != labels.size()) {
    throw std::invalid_argument("mahalanobis_fit needs matching non-empty vectors and labels");
  }
  const Eigen::Index k = static_cast<Eigen::Index>(vectors.front().size());
  const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  if (num_classes < 2) throw std::invalid_argument("mahalanobis_fit needs at least two classes");

  std::vector<Eigen::VectorXd> sums(num_classes, Eigen::VectorXd::Zero(k));
  std::vector<long long> counts(num_classes, 0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (static_cast<Eigen::Index>(vectors[i].size()) != k) {
      throw std::invalid_argument("inconsistent vector dimension in mahalanobis_fit");
    }
    if (labels[i] < 0) throw std::invalid_argument("negative class label");
    sums[labels[i]] += Eigen::Map<const Eigen::VectorXd>(vectors[i].data(), k);
    counts[labels[i]] += 1;
  }

  MahalanobisModel m;
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw std::runtime_error("mahalanobis_fit: class " + std::to_string(c) + " has no samples");
    }
    m.class_means.push_back(sums[c] / static_cast<double>(counts[c]));
  }

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const Eigen::VectorXd d =
        Eigen::Map<const Eigen::VectorXd>(vectors[i].data(), k) - m.class_means[labels[i]];
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(vectors.size());
  m.shared_covariance = cov;

  Eigen::MatrixXd regularized = cov;
  if (ridge) {
    const double tr = cov.trace();
    const double lambda = 1e-6 * (tr > 0.0 ? tr / static_cast<double>(k) : 1.0);
    regularized += lambda * Eigen::MatrixXd::Identity(k, k);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(regularized);
  if (!lu.isInvertible()) {
    throw std::runtime_error("mahalanobis_fit: covariance singular after regularization");
  }
  m.inverse_covariance = lu.inverse();
  return m;
}

double mahalanobis_score(const MahalanobisModel& m, const std::vector<double>& v) {
  const Eigen::Index k = m.inverse_covariance.rows();
  if (static_cast<Eigen::Index>(v.size()) != k) {
    throw std::invalid_argument("mahalanobis_score dimension mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> x(v.data(), k);
  double best = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& mu : m.class_means) {
    const Eigen::VectorXd d = x - mu;
    best = std::max(best, -(d.transpose() * m.inverse_covariance * d).value());
  }
  return best;
}

}  // namespace doctor::scoring
