#include "doctor/perturb.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace doctor::perturb {

namespace {

double stable_sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::vector<double> grad_analytic(const std::vector<double>& x, Method method,
                                  const trainer::LogisticClassifier& c,
                                  double temperature,
                                  const scoring::MahalanobisModel* mhl) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const double s = trainer::logit(c, x);
  const double p = stable_sigmoid(s / temperature);
  // Branch of the currently predicted class; predict's tie rule decides at
  // the argmax switch p = 1/2.
  const double branch = trainer::predict(c, x) > 0 ? 1.0 : -1.0;

  double factor = 0.0;  // gradient = factor * w
  switch (method) {
    case Method::beta:
      // d/dx log(pmax/(1-pmax)); pmax(1-pmax) = p(1-p) cancels exactly.
      factor = branch / temperature;
      break;
    case Method::alpha: {
      const double g = 1.0 - 2.0 * p * (1.0 - p);
      factor = (2.0 * p - 1.0) / (g * temperature);
      break;
    }
    case Method::odin: {
      const double pmax = std::max(p, 1.0 - p);
      factor = branch * p * (1.0 - p) / (pmax * temperature);
      break;
    }
    case Method::mahalanobis: {
      if (mhl == nullptr) {
        throw std::invalid_argument("mahalanobis gradient needs a fitted model");
      }
      if (mhl->inverse_covariance.rows() != 2) {
        throw std::invalid_argument("mahalanobis gradient expects the binary posterior space");
      }
      const Eigen::Vector2d v(1.0 - p, p);
      int best = 0;
      double best_m = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < mhl->class_means.size(); ++k) {
        const Eigen::VectorXd d = v - mhl->class_means[k];
        const double m = -(d.transpose() * mhl->inverse_covariance * d).value();
        if (m > best_m) {
          best_m = m;
          best = static_cast<int>(k);
        }
      }
      const Eigen::VectorXd dm = -2.0 * mhl->inverse_covariance * (v - mhl->class_means[best]);
      factor = (dm(1) - dm(0)) * p * (1.0 - p) / temperature;
      break;
    }
  }

  std::vector<double> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) grad[j] = factor * c.weights[j];
  return grad;
}

std::vector<double> grad_fd(const std::vector<double>& x,
                            const std::function<double(const std::vector<double>&)>& score_fn,
                            double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  std::vector<double> grad(x.size());
  std::vector<double> probe = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double up = score_fn(probe);
    probe[j] = x[j] - h;
    const double down = score_fn(probe);
    probe[j] = x[j];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error("non-finite score at finite-difference probe");
    }
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::vector<double> preprocess(const std::vector<double>& x, const PerturbSpec& spec,
                               const trainer::LogisticClassifier& c,
                               const scoring::MahalanobisModel* mhl) {
  if (spec.epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
  if (spec.epsilon == 0.0) return x;
  const std::vector<double> grad = grad_analytic(x, spec.method, c, spec.temperature, mhl);
  std::vector<double> shifted(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    shifted[j] = x[j] - spec.epsilon * sign(-grad[j]);
  }
  return shifted;
}

}  // namespace doctor::perturb
