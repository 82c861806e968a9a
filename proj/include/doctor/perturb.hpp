#pragma once

#include <functional>
#include <vector>

#include "doctor/scoring.hpp"
#include "doctor/trainer.hpp"

namespace doctor::perturb {

enum class Method { alpha, beta, odin, mahalanobis };

struct PerturbSpec {
  double epsilon = 0.0;
  Method method = Method::beta;
  double temperature = 1.0;
};

// Exact gradient at x of the method's objective L for the logistic model:
//   L_beta  = -log(pe_hat / (1 - pe_hat))
//   L_alpha = -log((1 - g_hat) / g_hat)
//   L_odin  =  log SODIN
//   L_mahalanobis = M(posterior(x))      (requires mhl)
// all evaluated on the temperature-T posterior. At the argmax switch
// (logit = 0) the currently predicted class's branch is taken; the objective
// is non-smooth there.
std::vector<double> grad_analytic(const std::vector<double>& x, Method method,
                                  const trainer::LogisticClassifier& c,
                                  double temperature,
                                  const scoring::MahalanobisModel* mhl = nullptr);

// Central finite differences of an arbitrary scalar score function.
std::vector<double> grad_fd(const std::vector<double>& x,
                            const std::function<double(const std::vector<double>&)>& score_fn,
                            double h);

// x_tilde = x - epsilon * sign(-grad L(x)), with sign(0) = 0 componentwise;
// epsilon = 0 returns x unchanged.
std::vector<double> preprocess(const std::vector<double>& x, const PerturbSpec& spec,
                               const trainer::LogisticClassifier& c,
                               const scoring::MahalanobisModel* mhl = nullptr);

}  // namespace doctor::perturb
