#include "doctor/gaussian_model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "doctor/rng.hpp"

namespace doctor::gaussian {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_model(const GaussianBinaryModel& model) {
  if (model.mu.empty()) throw std::invalid_argument("model mean is empty");
  if (!(model.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  for (double v : model.mu) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite model mean");
  }
}

double stable_sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

}  // namespace

std::vector<LabeledSample> sample_pool(const GaussianBinaryModel& model,
                                       std::size_t n_per_class, std::uint64_t seed) {
  check_model(model);
  if (n_per_class == 0) throw std::invalid_argument("n_per_class must be at least 1");
  Rng rng(seed);
  std::vector<LabeledSample> pool;
  pool.reserve(2 * n_per_class);
  for (int label : {-1, +1}) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      LabeledSample s;
      s.y = label;
      s.x.resize(model.mu.size());
      for (std::size_t j = 0; j < model.mu.size(); ++j) {
        s.x[j] = label * model.mu[j] + model.sigma * rng.normal();
      }
      pool.push_back(std::move(s));
    }
  }
  return pool;
}

SplitDataset split(const std::vector<LabeledSample>& pool, std::size_t n_train,
                   std::uint64_t seed) {
  if (n_train == 0 || n_train >= pool.size()) {
    throw std::invalid_argument("n_train out of range: " + std::to_string(n_train));
  }
  std::vector<std::size_t> indices(pool.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(indices);
  SplitDataset out;
  out.seed = seed;
  out.train.reserve(n_train);
  out.test.reserve(pool.size() - n_train);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    (i < n_train ? out.train : out.test).push_back(pool[indices[i]]);
  }
  return out;
}

int bayes_classify(const GaussianBinaryModel& model, const std::vector<double>& x) {
  check_model(model);
  return dot(x, model.mu) >= 0.0 ? +1 : -1;
}

scoring::SoftmaxVector true_posterior(const GaussianBinaryModel& model,
                                      const std::vector<double>& x) {
  check_model(model);
  const double p_plus = stable_sigmoid(2.0 * dot(x, model.mu) / (model.sigma * model.sigma));
  return {1.0 - p_plus, p_plus};
}

double true_pe(const GaussianBinaryModel& model, int predicted_label,
               const std::vector<double>& x) {
  if (predicted_label != -1 && predicted_label != +1) {
    throw std::invalid_argument("prediction must be -1 or +1");
  }
  return 1.0 - true_posterior(model, x)[label_to_index(predicted_label)];
}

double optimal_score(const GaussianBinaryModel& model, int predicted_label,
                     const std::vector<double>& x) {
  if (predicted_label != -1 && predicted_label != +1) {
    throw std::invalid_argument("prediction must be -1 or +1");
  }
  check_model(model);
  const double log_score =
      -2.0 * predicted_label * dot(x, model.mu) / (model.sigma * model.sigma);
  return std::exp(log_score);
}

double kl_delta(const GaussianBinaryModel& model,
                const scoring::SoftmaxVector& classifier_posterior,
                const std::vector<double>& x) {
  scoring::validate_softmax(classifier_posterior);
  if (classifier_posterior.size() != 2) {
    throw std::invalid_argument("kl_delta expects a binary posterior");
  }
  const double q = true_posterior(model, x)[1];
  const double qh = classifier_posterior[1];
  const auto term = [](double a, double b) {
    if (a == 0.0) return 0.0;
    if (b <= 0.0) return std::numeric_limits<double>::infinity();
    return a * std::log(a / b);
  };
  const double kl = term(q, qh) + term(1.0 - q, 1.0 - qh);
  return 2.0 * std::sqrt(2.0 * kl);
}

double markov_epsilon(double cross_entropy_risk, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (cross_entropy_risk < 0.0) throw std::invalid_argument("risk must be non-negative");
  return 2.0 * std::sqrt(2.0 * cross_entropy_risk / eta);
}

QuadratureResult error_quadrature(const GaussianBinaryModel& model,
                                  const std::vector<double>& w, double b) {
  check_model(model);
  if (model.mu.size() != 2 || w.size() != 2) {
    throw std::invalid_argument("error_quadrature supports d = 2 only");
  }

  // Work in a frame whose first axis is the classifier normal, so the
  // discontinuity of Pe along w.x + b = 0 falls exactly on a cell edge and
  // the midpoint rule stays second-order accurate.
  const double norm_w = std::hypot(w[0], w[1]);
  const bool constant = norm_w < 1e-300;
  double e1[2], e2[2];
  if (constant) {
    e1[0] = 1.0, e1[1] = 0.0;
  } else {
    e1[0] = w[0] / norm_w, e1[1] = w[1] / norm_w;
  }
  e2[0] = -e1[1], e2[1] = e1[0];
  const double boundary = constant ? 0.0 : -b / norm_w;
  const int constant_prediction = b > 0.0 ? +1 : -1;

  const double m1 = model.mu[0] * e1[0] + model.mu[1] * e1[1];
  const double m2 = model.mu[0] * e2[0] + model.mu[1] * e2[1];
  const double sigma2 = model.sigma * model.sigma;
  const double extent = std::max(std::abs(model.mu[0]), std::abs(model.mu[1])) +
                        6.0 * model.sigma;
  const double h = model.sigma / 16.0;

  struct Axis {
    std::vector<double> mid, width;
  };
  const auto subdivide = [&](Axis& axis, double lo, double hi) {
    const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / h));
    const double step = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      axis.mid.push_back(lo + (static_cast<double>(i) + 0.5) * step);
      axis.width.push_back(step);
    }
  };
  Axis u1, u2;
  if (!constant && boundary > -extent && boundary < extent) {
    subdivide(u1, -extent, boundary);
    subdivide(u1, boundary, extent);
  } else {
    subdivide(u1, -extent, extent);
  }
  subdivide(u2, -extent, extent);

  const double log_norm = -std::log(2.0 * 3.14159265358979323846 * sigma2);
  double mass = 0.0, p_err = 0.0, total_abs = 0.0;
  // Two passes: the conditionals need the normalizers P(E=1), P(E=0) first.
  for (int pass = 0; pass < 2; ++pass) {
    const double pe1 = p_err, pe0 = mass - p_err;
    for (std::size_t i = 0; i < u1.mid.size(); ++i) {
      const double a = u1.mid[i];
      for (std::size_t j = 0; j < u2.mid.size(); ++j) {
        const double c = u2.mid[j];
        const double area = u1.width[i] * u2.width[j];
        const double dp = (a - m1) * (a - m1) + (c - m2) * (c - m2);
        const double dm = (a + m1) * (a + m1) + (c + m2) * (c + m2);
        const double px = 0.5 * std::exp(log_norm - dp / (2.0 * sigma2)) +
                          0.5 * std::exp(log_norm - dm / (2.0 * sigma2));
        const double q = stable_sigmoid(2.0 * (a * m1 + c * m2) / sigma2);
        const int pred = constant ? constant_prediction : (a > boundary ? +1 : -1);
        const double pe = pred > 0 ? 1.0 - q : q;
        if (pass == 0) {
          mass += px * area;
          p_err += px * pe * area;
        } else {
          total_abs += std::abs(pe / pe1 - (1.0 - pe) / pe0) * px * area;
        }
      }
    }
  }

  if (std::abs(mass - 1.0) > 1e-4) {
    throw std::runtime_error("quadrature normalization check failed: mixture mass " +
                             std::to_string(mass));
  }
  QuadratureResult result;
  result.mixture_mass = mass;
  result.error_rate = p_err;
  result.tv = 0.5 * total_abs;
  return result;
}

double tv_distance_numeric(const GaussianBinaryModel& model,
                           const std::vector<double>& w, double b) {
  return error_quadrature(model, w, b).tv;
}

}  // namespace doctor::gaussian
