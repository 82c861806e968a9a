#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "doctor/perturb.hpp"
#include "doctor/rng.hpp"
#include "doctor/scoring.hpp"
#include "doctor/trainer.hpp"

using doctor::Rng;
using doctor::scoring::MahalanobisModel;
using doctor::trainer::LogisticClassifier;
using namespace doctor::perturb;

namespace {

LogisticClassifier reference_classifier() {
  LogisticClassifier c;
  c.weights = {0.8, -0.5};
  c.bias = 0.1;
  return c;
}

// The analytic objectives, expressed through the public scoring API so the
// finite-difference check is independent of the gradient code.
std::function<double(const std::vector<double>&)> objective(
    Method method, const LogisticClassifier& c, double T, const MahalanobisModel* mhl) {
  return [method, &c, T, mhl](const std::vector<double>& x) {
    const auto post = doctor::trainer::posterior(c, x, T);
    switch (method) {
      case Method::beta:
        return -std::log(doctor::scoring::doctor_beta_score(post));
      case Method::alpha:
        return -std::log(doctor::scoring::doctor_alpha_score(post));
      case Method::odin:
        return std::log(std::max(post[0], post[1]));
      case Method::mahalanobis:
        return doctor::scoring::mahalanobis_score(*mhl, post);
    }
    return 0.0;
  };
}

MahalanobisModel posterior_space_model(const LogisticClassifier& c) {
  Rng rng(61);
  std::vector<std::vector<double>> vecs;
  std::vector<int> labels;
  for (int i = 0; i < 400; ++i) {
    const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    vecs.push_back(doctor::trainer::posterior(c, x, 1.0));
    labels.push_back(doctor::trainer::predict(c, x) > 0 ? 1 : 0);
  }
  return doctor::scoring::mahalanobis_fit(vecs, labels);  // ridge rescues the rank-1 scatter
}

// Posterior vectors are collinear, so a fitted model's inverse covariance is
// dominated by the ridge (~1e6) and its curvature swamps central differences.
// Hand-build a moderate model to keep the finite-difference check meaningful.
MahalanobisModel well_conditioned_model() {
  MahalanobisModel m;
  Eigen::VectorXd m0(2), m1(2);
  m0 << 0.25, 0.75;
  m1 << 0.7, 0.3;
  m.class_means = {m0, m1};
  m.shared_covariance.resize(2, 2);
  m.shared_covariance << 0.5, 0.1, 0.1, 0.4;
  m.inverse_covariance = m.shared_covariance.inverse();
  return m;
}

}  // namespace

TEST_CASE("grad_fd reproduces simple closed-form gradients") {
  const auto quad = [](const std::vector<double>& v) {
    return v[0] * v[0] + v[1] * v[1];
  };
  const auto g = grad_fd({1.0, 2.0}, quad, 1e-5);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-8));

  const auto linear = [](const std::vector<double>& v) {
    return 3.0 * v[0] - 2.0 * v[1] + 7.0;
  };
  const auto gl = grad_fd({-4.2, 0.3}, linear, 1e-5);
  CHECK(gl[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(gl[1] == doctest::Approx(-2.0).epsilon(1e-9));

  CHECK_THROWS_AS(grad_fd({1.0}, quad, 0.0), std::invalid_argument);
  const auto bad = [](const std::vector<double>&) {
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(grad_fd({1.0, 1.0}, bad, 1e-5), std::runtime_error);
}

TEST_CASE("grad_analytic matches finite differences away from the argmax switch") {
  const LogisticClassifier c = reference_classifier();
  const MahalanobisModel mhl = well_conditioned_model();
  Rng rng(73);
  int checked = 0;
  while (checked < 40) {
    const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const double s = doctor::trainer::logit(c, x);
    if (std::abs(s) < 0.15 || std::abs(s) > 3.0) continue;  // keep clear of the kink
    ++checked;
    for (const double T : {1.0, 2.5}) {
      for (const Method m : {Method::beta, Method::alpha, Method::odin, Method::mahalanobis}) {
        const auto fd = grad_fd(x, objective(m, c, T, &mhl), 1e-5);
        const auto an = grad_analytic(x, m, c, T, &mhl);
        for (int j = 0; j < 2; ++j) {
          CHECK(an[j] == doctest::Approx(fd[j]).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("gradients are parallel to the weight vector") {
  const LogisticClassifier c = reference_classifier();
  const MahalanobisModel mhl = posterior_space_model(c);
  Rng rng(79);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    for (const Method m : {Method::beta, Method::alpha, Method::odin, Method::mahalanobis}) {
      const auto g = grad_analytic(x, m, c, 1.0, &mhl);
      CHECK(g[0] * c.weights[1] == doctest::Approx(g[1] * c.weights[0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero weights give a zero gradient") {
  LogisticClassifier c;
  c.weights = {0.0, 0.0};
  c.bias = 0.4;
  for (const Method m : {Method::beta, Method::alpha, Method::odin}) {
    const auto g = grad_analytic({1.0, -2.0}, m, c, 1.0);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
  }
}

TEST_CASE("branch conventions at and away from the decision boundary") {
  LogisticClassifier c;
  c.weights = {1.0};
  c.bias = 0.0;
  // Exactly on the boundary the tie rule selects the -1 branch.
  const auto gb = grad_analytic({0.0}, Method::beta, c, 1.0);
  CHECK(gb[0] == doctest::Approx(-1.0).epsilon(1e-15));
  // The gini objective is flat at p = 1/2.
  const auto ga = grad_analytic({0.0}, Method::alpha, c, 1.0);
  CHECK(ga[0] == 0.0);

  // Predicted +1 at x = 0.3: confidence grows along +w.
  const auto g = grad_analytic({0.3}, Method::beta, c, 1.0);
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-15));
  const auto g2 = grad_analytic({0.3}, Method::beta, c, 2.0);
  CHECK(g2[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("the three softmax objectives share one ascent direction") {
  const LogisticClassifier c = reference_classifier();
  Rng rng(83);
  const auto sgn = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
  int checked = 0;
  while (checked < 1000) {
    const std::vector<double> x{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
    if (std::abs(doctor::trainer::logit(c, x)) < 1e-6) continue;
    ++checked;
    const auto gb = grad_analytic(x, Method::beta, c, 1.3);
    const auto ga = grad_analytic(x, Method::alpha, c, 1.3);
    const auto go = grad_analytic(x, Method::odin, c, 1.3);
    for (int j = 0; j < 2; ++j) {
      CHECK(sgn(gb[j]) == sgn(ga[j]));
      CHECK(sgn(gb[j]) == sgn(go[j]));
    }
  }
}

TEST_CASE("preprocess moves each coordinate by at most epsilon") {
  const LogisticClassifier c = reference_classifier();
  Rng rng(89);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    PerturbSpec spec;
    spec.epsilon = 0.05;
    spec.method = Method::beta;
    const auto moved = preprocess(x, spec, c);
    for (int j = 0; j < 2; ++j) {
      const double d = std::abs(moved[j] - x[j]);
      CHECK(d <= spec.epsilon + 1e-15);
      CHECK((d == 0.0 || d == doctest::Approx(spec.epsilon).epsilon(1e-12)));
    }
  }
}

TEST_CASE("preprocess with epsilon zero is the identity") {
  const LogisticClassifier c = reference_classifier();
  const std::vector<double> x{0.7, -1.2};
  PerturbSpec spec;
  spec.epsilon = 0.0;
  CHECK(preprocess(x, spec, c) == x);
}

TEST_CASE("preprocess follows the predicted-class confidence direction") {
  LogisticClassifier c;
  c.weights = {1.0};
  c.bias = 0.0;
  PerturbSpec spec;
  spec.epsilon = 0.1;
  spec.method = Method::beta;
  // Predicted +1 at x = 0.3 moves up; predicted -1 at x = -0.3 moves down.
  CHECK(preprocess({0.3}, spec, c)[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(preprocess({-0.3}, spec, c)[0] == doctest::Approx(-0.4).epsilon(1e-15));
}

TEST_CASE("zero gradient components stay untouched") {
  LogisticClassifier c;
  c.weights = {1.0, 0.0};
  c.bias = 0.0;
  PerturbSpec spec;
  spec.epsilon = 0.2;
  spec.method = Method::beta;
  const std::vector<double> x{0.5, 9.0};
  const auto moved = preprocess(x, spec, c);
  CHECK(moved[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(moved[1] == 9.0);
}

TEST_CASE("two small steps compose like one large step away from the switch") {
  const LogisticClassifier c = reference_classifier();
  Rng rng(97);
  int checked = 0;
  while (checked < 50) {
    const std::vector<double> x{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    if (std::abs(doctor::trainer::logit(c, x)) < 0.2) continue;
    ++checked;
    PerturbSpec small;
    small.epsilon = 0.01;
    small.method = Method::beta;
    PerturbSpec big = small;
    big.epsilon = 0.02;
    const auto twice = preprocess(preprocess(x, small, c), small, c);
    const auto once = preprocess(x, big, c);
    for (int j = 0; j < 2; ++j) {
      CHECK(twice[j] == doctest::Approx(once[j]).epsilon(1e-14));
    }
  }
}

TEST_CASE("perturbation error handling") {
  const LogisticClassifier c = reference_classifier();
  PerturbSpec spec;
  spec.epsilon = -0.1;
  CHECK_THROWS_AS(preprocess({0.0, 0.0}, spec, c), std::invalid_argument);

  CHECK_THROWS_AS(grad_analytic({0.0, 0.0}, Method::beta, c, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(grad_analytic({0.0, 0.0}, Method::mahalanobis, c, 1.0),
                  std::invalid_argument);
  PerturbSpec mspec;
  mspec.epsilon = 0.1;
  mspec.method = Method::mahalanobis;
  CHECK_THROWS_AS(preprocess({0.0, 0.0}, mspec, c), std::invalid_argument);
}
