#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "doctor/gaussian_model.hpp"
#include "doctor/rng.hpp"
#include "doctor/scoring.hpp"

using doctor::Rng;
using namespace doctor::gaussian;

namespace {

constexpr double kSigmoid1 = 0.7310585786300049;        // sigmoid(1)
constexpr double kPhiHalfSqrt2 = 0.7602499389065233;    // Phi(sqrt(2)/2)
constexpr double kPhiQuarterSqrt2 = 0.6381631950841185; // Phi(sqrt(2)/4)
constexpr double kTvConstSigma2 = 0.5204998778130465;   // 2 Phi(sqrt(2)/2) - 1
constexpr double kTvConstSigma4 = 0.27632639016823696;  // 2 Phi(sqrt(2)/4) - 1
constexpr double kKlSigmoid1Half = 0.11094407167172735; // KL(sigmoid(1) || 1/2) nats
constexpr double kDeltaSigmoid1Half = 0.9421000867072558; // 2 sqrt(2 KL)
constexpr double kTwoSqrtTen = 6.324555320336759;       // 2 sqrt(10)

GaussianBinaryModel reference_model(double sigma = 2.0) {
  GaussianBinaryModel m;
  m.mu = {1.0, 1.0};
  m.sigma = sigma;
  return m;
}

double gauss_density(const std::vector<double>& x, const std::vector<double>& mean,
                     double sigma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d2 += (x[i] - mean[i]) * (x[i] - mean[i]);
  }
  const double s2 = sigma * sigma;
  const double norm = std::pow(2.0 * 3.14159265358979323846 * s2,
                               -0.5 * static_cast<double>(x.size()));
  return norm * std::exp(-d2 / (2.0 * s2));
}

}  // namespace

TEST_CASE("sample_pool produces the documented layout and class statistics") {
  const GaussianBinaryModel model = reference_model();
  const std::size_t n = 20000;
  const auto pool = sample_pool(model, n, 5);
  REQUIRE(pool.size() == 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(pool[i].y == -1);
    CHECK(pool[n + i].y == +1);
    REQUIRE(pool[i].x.size() == 2);
  }
  double mn[2] = {0.0, 0.0}, mp[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < 2; ++j) {
      mn[j] += pool[i].x[j];
      mp[j] += pool[n + i].x[j];
    }
  }
  const double tol = 3.0 * model.sigma / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(mn[j] / n - (-1.0)) < tol);
    CHECK(std::abs(mp[j] / n - 1.0) < tol);
  }
}

TEST_CASE("sample_pool is deterministic in the seed") {
  const GaussianBinaryModel model = reference_model();
  const auto a = sample_pool(model, 50, 123);
  const auto b = sample_pool(model, 50, 123);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].y == b[i].y);
    CHECK(a[i].x == b[i].x);
  }
  const auto c = sample_pool(model, 50, 124);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].x != c[i].x) any_diff = true;
  }
  CHECK(any_diff);

  CHECK_THROWS_AS(sample_pool(model, 0, 1), std::invalid_argument);
  GaussianBinaryModel bad = model;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(sample_pool(bad, 10, 1), std::invalid_argument);
  bad = model;
  bad.mu.clear();
  CHECK_THROWS_AS(sample_pool(bad, 10, 1), std::invalid_argument);
}

TEST_CASE("split partitions the pool without loss") {
  const GaussianBinaryModel model = reference_model();
  const auto pool = sample_pool(model, 150, 7);
  const SplitDataset s = split(pool, 201, 42);
  CHECK(s.train.size() == 201);
  CHECK(s.test.size() == pool.size() - 201);
  CHECK(s.seed == 42);

  // Same seed reproduces the split; another seed permutes differently.
  const SplitDataset t = split(pool, 201, 42);
  bool same = s.train.size() == t.train.size();
  for (std::size_t i = 0; same && i < s.train.size(); ++i) {
    same = s.train[i].x == t.train[i].x && s.train[i].y == t.train[i].y;
  }
  CHECK(same);
  const SplitDataset u = split(pool, 201, 43);
  bool any_diff = false;
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    if (s.train[i].x != u.train[i].x) any_diff = true;
  }
  CHECK(any_diff);

  // Union of train and test is exactly the pool (as a multiset).
  using Key = std::tuple<double, double, int>;
  std::vector<Key> expect, got;
  for (const auto& p : pool) expect.emplace_back(p.x[0], p.x[1], p.y);
  for (const auto& p : s.train) got.emplace_back(p.x[0], p.x[1], p.y);
  for (const auto& p : s.test) got.emplace_back(p.x[0], p.x[1], p.y);
  std::sort(expect.begin(), expect.end());
  std::sort(got.begin(), got.end());
  CHECK(expect == got);

  CHECK_THROWS_AS(split(pool, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(pool, pool.size(), 1), std::invalid_argument);
}

TEST_CASE("bayes_classify thresholds on x.mu with ties to +1") {
  const GaussianBinaryModel model = reference_model();
  CHECK(bayes_classify(model, {1.0, 1.0}) == +1);
  CHECK(bayes_classify(model, {-1.0, -1.0}) == -1);
  CHECK(bayes_classify(model, {1.0, -1.0}) == +1);  // x.mu == 0 tie
  CHECK(bayes_classify(model, {-3.0, 2.0}) == -1);
  CHECK_THROWS_AS(bayes_classify(model, {1.0}), std::invalid_argument);
}

TEST_CASE("bayes accuracy matches the closed form Phi(|mu|/sigma)") {
  const GaussianBinaryModel model = reference_model();
  const auto pool = sample_pool(model, 20000, 11);
  long long correct = 0;
  for (const auto& s : pool) {
    if (bayes_classify(model, s.x) == s.y) ++correct;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(pool.size());
  CHECK(std::abs(acc - kPhiHalfSqrt2) < 0.01);
}

TEST_CASE("true_posterior closed form and density-ratio cross-check") {
  const GaussianBinaryModel model = reference_model();
  const auto p0 = true_posterior(model, {0.0, 0.0});
  CHECK(p0[0] == 0.5);
  CHECK(p0[1] == 0.5);
  const auto p1 = true_posterior(model, {1.0, 1.0});
  CHECK(p1[1] == doctest::Approx(kSigmoid1).epsilon(1e-15));
  CHECK(p1[0] + p1[1] == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0)};
    const double plus = gauss_density(x, {1.0, 1.0}, model.sigma);
    const double minus = gauss_density(x, {-1.0, -1.0}, model.sigma);
    const double direct = plus / (plus + minus);
    CHECK(true_posterior(model, x)[1] == doctest::Approx(direct).epsilon(1e-10));
  }

  GaussianBinaryModel m3;
  m3.mu = {0.5, -0.3, 1.2};
  m3.sigma = 1.7;
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0),
                                rng.uniform(-4.0, 4.0)};
    const double plus = gauss_density(x, {0.5, -0.3, 1.2}, m3.sigma);
    const double minus = gauss_density(x, {-0.5, 0.3, -1.2}, m3.sigma);
    const double direct = plus / (plus + minus);
    CHECK(true_posterior(m3, x)[1] == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("true_pe complements the posterior of the prediction") {
  const GaussianBinaryModel model = reference_model();
  CHECK(true_pe(model, +1, {1.0, 1.0}) == doctest::Approx(1.0 - kSigmoid1).epsilon(1e-15));
  CHECK(true_pe(model, +1, {1.0, 1.0}) == doctest::Approx(0.2689414213699951).epsilon(1e-15));
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    const std::vector<double> nx{-x[0], -x[1]};
    CHECK(true_pe(model, +1, x) + true_pe(model, -1, x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(true_pe(model, +1, x) == doctest::Approx(true_pe(model, -1, nx)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(true_pe(model, 0, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("optimal_score is the error odds of the prediction") {
  const GaussianBinaryModel model = reference_model();
  // On the decision boundary the density ratio is exactly 1.
  CHECK(optimal_score(model, +1, {1.0, -1.0}) == 1.0);
  CHECK(optimal_score(model, -1, {1.0, -1.0}) == 1.0);

  Rng rng(19);
  for (int i = 0; i < 60; ++i) {
    const std::vector<double> x{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    const int f = bayes_classify(model, x);
    const double score = optimal_score(model, f, x);

    // Direct density-ratio definition.
    const std::vector<double> mf{f * 1.0, f * 1.0};
    const std::vector<double> mo{-f * 1.0, -f * 1.0};
    const double direct = gauss_density(x, mo, model.sigma) / gauss_density(x, mf, model.sigma);
    CHECK(score == doctest::Approx(direct).epsilon(1e-10));

    // score / (1 + score) is exactly the true error probability of f.
    CHECK(score / (1.0 + score) == doctest::Approx(true_pe(model, f, x)).epsilon(1e-12));

    // Flipping the prediction inverts the odds.
    CHECK(optimal_score(model, -f, x) == doctest::Approx(1.0 / score).epsilon(1e-12));
  }
  CHECK_THROWS_AS(optimal_score(model, 2, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("kl_delta reference values and symmetry") {
  const GaussianBinaryModel model = reference_model();
  // Matching posteriors give zero divergence.
  const auto q = true_posterior(model, {0.3, -0.7});
  CHECK(kl_delta(model, q, {0.3, -0.7}) == doctest::Approx(0.0).epsilon(1e-12));

  // q = sigmoid(1) against the uninformative posterior.
  const double delta = kl_delta(model, {0.5, 0.5}, {1.0, 1.0});
  CHECK(delta == doctest::Approx(kDeltaSigmoid1Half).epsilon(1e-13));
  CHECK(delta * delta / 8.0 == doctest::Approx(kKlSigmoid1Half).epsilon(1e-12));

  // Degenerate classifier posterior diverges.
  CHECK(std::isinf(kl_delta(model, {1.0, 0.0}, {1.0, 1.0})));
  CHECK(std::isinf(kl_delta(model, {0.0, 1.0}, {1.0, 1.0})));

  // Swapping both class roles and reflecting x leaves Delta unchanged.
  Rng rng(29);
  for (int i = 0; i < 40; ++i) {
    const std::vector<double> x{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
    const double a = rng.uniform(0.05, 0.95);
    CHECK(kl_delta(model, {1.0 - a, a}, x) ==
          doctest::Approx(kl_delta(model, {a, 1.0 - a}, {-x[0], -x[1]})).epsilon(1e-10));
  }
  CHECK_THROWS_AS(kl_delta(model, {0.2, 0.2, 0.6}, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(kl_delta(model, {0.9, 0.9}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("markov_epsilon closed form") {
  CHECK(markov_epsilon(0.0, 0.5) == 0.0);
  CHECK(markov_epsilon(0.5, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(markov_epsilon(0.5, 0.1) == doctest::Approx(kTwoSqrtTen).epsilon(1e-15));
  CHECK_THROWS_AS(markov_epsilon(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(markov_epsilon(0.5, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(markov_epsilon(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("error_quadrature for the constant classifier matches the closed form") {
  const GaussianBinaryModel m2 = reference_model(2.0);
  const QuadratureResult r2 = error_quadrature(m2, {0.0, 0.0}, 0.0);
  CHECK(std::abs(r2.mixture_mass - 1.0) < 1e-4);
  CHECK(r2.error_rate == doctest::Approx(0.5).epsilon(2e-4));
  CHECK(r2.tv == doctest::Approx(kTvConstSigma2).epsilon(2e-4));

  const GaussianBinaryModel m4 = reference_model(4.0);
  const QuadratureResult r4 = error_quadrature(m4, {0.0, 0.0}, 0.0);
  CHECK(r4.tv == doctest::Approx(kTvConstSigma4).epsilon(2e-4));

  // A positive bias flips the constant prediction but not the statistics.
  const QuadratureResult rb = error_quadrature(m2, {0.0, 0.0}, 3.0);
  CHECK(rb.error_rate == doctest::Approx(0.5).epsilon(2e-4));
  CHECK(rb.tv == doctest::Approx(kTvConstSigma2).epsilon(2e-4));
}

TEST_CASE("error_quadrature along the optimal direction") {
  const GaussianBinaryModel m2 = reference_model(2.0);
  const QuadratureResult r2 = error_quadrature(m2, {1.0, 1.0}, 0.0);
  CHECK(std::abs(r2.mixture_mass - 1.0) < 1e-4);
  CHECK(r2.error_rate == doctest::Approx(1.0 - kPhiHalfSqrt2).epsilon(1e-3));
  CHECK(r2.tv > 0.0);
  CHECK(r2.tv < 1.0);

  const GaussianBinaryModel m4 = reference_model(4.0);
  const QuadratureResult r4 = error_quadrature(m4, {1.0, 1.0}, 0.0);
  CHECK(r4.error_rate == doctest::Approx(1.0 - kPhiQuarterSqrt2).epsilon(1e-3));

  // Separability decays with noise: sigma = 2 separates better than sigma = 4.
  CHECK(r2.tv > r4.tv);

  CHECK(tv_distance_numeric(m2, {1.0, 1.0}, 0.0) == r2.tv);

  CHECK_THROWS_AS(error_quadrature(m2, {1.0}, 0.0), std::invalid_argument);
  GaussianBinaryModel m1;
  m1.mu = {1.0};
  m1.sigma = 2.0;
  CHECK_THROWS_AS(error_quadrature(m1, {1.0, 0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("pointwise mismatch identity and soft-error bounds") {
  const GaussianBinaryModel model = reference_model();
  Rng rng(37);
  for (int i = 0; i < 400; ++i) {
    const std::vector<double> x{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    const double q = true_posterior(model, x)[1];
    const double qh = rng.uniform(0.01, 0.99);
    const int f = qh >= 0.5 ? +1 : -1;
    const double pe = true_pe(model, f, x);
    const double pe_hat = std::min(qh, 1.0 - qh);

    const double mism = pe * (1.0 - pe_hat) + (1.0 - pe) * pe_hat;
    // Same quantity written as a sum over class labels.
    const double direct = q * (1.0 - qh) + (1.0 - q) * qh;
    CHECK(mism == doctest::Approx(direct).epsilon(1e-12));

    // The soft error probability never exceeds the mismatch rate.
    CHECK(pe_hat <= mism + 1e-12);
    // Neither does the true error of a better-than-chance prediction.
    if (pe <= 0.5) CHECK(pe <= mism + 1e-12);
  }
}

TEST_CASE("divergence sandwich around the true error probability") {
  const GaussianBinaryModel model = reference_model();
  Rng rng(41);
  for (int i = 0; i < 400; ++i) {
    const std::vector<double> x{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    const double qh = rng.uniform(0.01, 0.99);
    const doctor::scoring::SoftmaxVector posterior{1.0 - qh, qh};
    const int f = qh >= 0.5 ? +1 : -1;
    const double pe = true_pe(model, f, x);
    const double g = doctor::scoring::g_hat(posterior);
    const double delta = kl_delta(model, posterior, x);
    CHECK(pe >= (1.0 - std::sqrt(g)) - delta - 1e-12);
    CHECK(pe <= (1.0 - g) + delta + 1e-12);
  }
}
