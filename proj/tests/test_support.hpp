#pragma once

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the fitter's cross-product path.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "mixedboot/core.hpp"
#include "mixedboot/fitter.hpp"
#include "mixedboot/random.hpp"

namespace mixedboot::testing {

struct SimSpec {
  std::size_t g = 10;
  std::vector<std::size_t> sizes;  // overrides n when nonempty
  std::size_t n = 5;
  VectorXd beta = VectorXd::Zero(2);  // intercept + slope when size 2
  MatrixXd D = MatrixXd::Identity(1, 1);
  double sigma2 = 1.0;
  std::uint64_t seed = 1;
};

// Design: intercept (+ one N(0,1) covariate when beta has 2 entries); random
// intercept, plus a random slope on the covariate when D is 2 x 2.
inline GroupedData simulate_dataset(const SimSpec& s) {
  RandomStream rng = make_stream(s.seed);
  const auto p = s.beta.size();
  const auto q = s.D.rows();
  std::vector<ClusterBlock> clusters;
  for (std::size_t i = 0; i < s.g; ++i) {
    const std::size_t n = s.sizes.empty() ? s.n : s.sizes[i];
    ClusterBlock c;
    c.cluster_id = std::to_string(i + 1);
    c.X.resize(static_cast<Eigen::Index>(n), p);
    c.Z.resize(static_cast<Eigen::Index>(n), q);
    c.y = VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < c.X.rows(); ++r) {
      const double x = standard_normal(rng);
      c.X(r, 0) = 1.0;
      if (p > 1) c.X(r, 1) = x;
      c.Z(r, 0) = 1.0;
      if (q > 1) c.Z(r, 1) = x;
    }
    clusters.push_back(std::move(c));
  }
  std::vector<std::string> fixed{"(Intercept)"}, random{"(Intercept)"};
  if (p > 1) fixed.push_back("x");
  if (q > 1) random.push_back("x");
  GroupedData shell(std::move(clusters), fixed, random);
  return shell.with_responses(simulate_response(shell, Parameters::make(s.beta, s.D, s.sigma2), rng));
}

// Balanced one-way layout: intercept-only fixed and random design.
inline GroupedData balanced_oneway(std::size_t g, std::size_t m, double sigma_b2, double sigma2, double mu,
                                   std::uint64_t seed) {
  SimSpec s;
  s.g = g;
  s.n = m;
  s.beta = VectorXd::Constant(1, mu);
  s.D = MatrixXd::Constant(1, 1, sigma_b2);
  s.sigma2 = sigma2;
  s.seed = seed;
  return simulate_dataset(s);
}

struct AnovaEstimates {
  double sigma_b2;
  double sigma2;
  double grand_mean;
};

// Closed-form REML solution for balanced one-way data: sigma_b2 =
// (MSA - MSE)/m and sigma2 = MSE when MSA > MSE; otherwise the between
// component sits at zero and sigma2 is the pooled SST / (N - 1).
inline AnovaEstimates anova_oracle(const GroupedData& data) {
  const double g = static_cast<double>(data.g());
  const double m = static_cast<double>(data.cluster(0).size());
  double grand = 0.0;
  for (const auto& c : data.clusters()) grand += c.y.sum();
  grand /= g * m;
  double ssa = 0.0, sse = 0.0;
  for (const auto& c : data.clusters()) {
    const double mean = c.y.mean();
    ssa += m * (mean - grand) * (mean - grand);
    sse += (c.y.array() - mean).square().sum();
  }
  const double msa = ssa / (g - 1.0);
  const double mse = sse / (g * (m - 1.0));
  if (msa <= mse) return {0.0, (ssa + sse) / (g * m - 1.0), grand};
  return {(msa - mse) / m, mse, grand};
}

// Direct evaluation of the profiled REML criterion with explicit n_i x n_i
// V* blocks and dense Cholesky factorizations.
inline double dense_deviance(const GroupedData& data, const VectorXd& theta) {
  const MatrixXd L = lambda_from_theta(theta, data.q());
  const auto p = static_cast<Eigen::Index>(data.p());
  MatrixXd xtvx = MatrixXd::Zero(p, p);
  VectorXd xtvy = VectorXd::Zero(p);
  double logdet = 0.0;
  std::vector<Eigen::LLT<MatrixXd>> factors;
  for (const auto& c : data.clusters()) {
    MatrixXd V = c.Z * L * L.transpose() * c.Z.transpose();
    V.diagonal().array() += 1.0;
    Eigen::LLT<MatrixXd> llt(V);
    for (Eigen::Index k = 0; k < V.rows(); ++k) logdet += 2.0 * std::log(llt.matrixLLT()(k, k));
    xtvx += c.X.transpose() * llt.solve(c.X);
    xtvy += c.X.transpose() * llt.solve(c.y);
    factors.push_back(std::move(llt));
  }
  const VectorXd beta = xtvx.llt().solve(xtvy);
  double rss = 0.0;
  for (std::size_t i = 0; i < data.g(); ++i) {
    const auto& c = data.cluster(i);
    const VectorXd r = c.y - c.X * beta;
    rss += r.dot(factors[i].solve(r));
  }
  const double n = static_cast<double>(data.n_total());
  const double dof = n - static_cast<double>(p);
  return logdet + std::log(xtvx.determinant()) + dof * std::log(rss) + dof * (1.0 - std::log(dof));
}

// A model assembled from given parameters rather than fitted; lambda is any
// square root of D / sigma2.
inline FittedModel hand_model(const GroupedData& data, const VectorXd& beta, const MatrixXd& D, double sigma2) {
  FittedModel m;
  m.data = std::make_shared<const GroupedData>(data);
  m.params = Parameters::make(beta, D, sigma2);
  m.lambda = psd_sqrt(m.params.D / sigma2);
  m.theta = VectorXd::Zero(static_cast<Eigen::Index>(theta_size(data.q())));
  m.converged = true;
  m.fixed_cov = MatrixXd::Identity(beta.size(), beta.size());
  return m;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace mixedboot::testing
