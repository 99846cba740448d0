#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mixedboot/core.hpp"

namespace mixedboot {

/// Lower bound on the log of each diagonal entry of the relative Cholesky
/// factor. Fits that end at the bound report the matching variance as zero.
inline constexpr double kLogDiagonalFloor = -11.5;

struct FittedModel {
  std::shared_ptr<const GroupedData> data;
  Parameters params;
  VectorXd theta;          // log-Cholesky optimum (floor applied)
  MatrixXd lambda;         // relative covariance factor, D = sigma2 * lambda * lambda'
  double reml_criterion = 0.0;  // -2 restricted log-likelihood, including the 2*pi term
  bool converged = false;
  bool boundary = false;
  int n_iterations = 0;
  MatrixXd fixed_cov;      // (sum X_i' V_i^-1 X_i)^-1
};

struct VarianceComponents {
  std::vector<std::pair<std::string, double>> entries;
  std::size_t nu = 0;
};

/// Number of free entries in a q x q lower-triangular factor.
constexpr std::size_t theta_size(std::size_t q) noexcept { return q * (q + 1) / 2; }

/// Maps theta (row-major lower triangle; log on the diagonal) to the
/// lower-triangular factor.
MatrixXd lambda_from_theta(const VectorXd& theta, std::size_t q);

/// Per-cluster cross products; everything the profiled criterion needs apart
/// from the residual pass.
struct CrossProducts {
  struct Block {
    MatrixXd ZtZ, ZtX, XtX;
    VectorXd Zty, Xty;
  };
  std::vector<Block> blocks;

  explicit CrossProducts(const GroupedData& data);
};

/// Everything evaluated at one relative covariance factor.
struct ProfiledFit {
  double deviance = 0.0;
  VectorXd beta;
  double rss = 0.0;       // sum_i r_i' V_i*^-1 r_i
  MatrixXd xtvx;          // sum_i X_i' V_i*^-1 X_i
};

/// Profiled REML criterion at a given factor. Throws NonFiniteObjective when
/// a factorization fails or the result overflows.
ProfiledFit evaluate_profiled(const GroupedData& data, const CrossProducts& cp, const MatrixXd& lambda);

/// -2 profiled restricted log-likelihood (without the 2*pi constant) at the
/// log-Cholesky vector theta.
double profiled_deviance(const GroupedData& data, const VectorXd& theta);

/// REML fit by Nelder-Mead over theta from three deterministic starts.
/// Non-convergence is reported through `converged`, never thrown.
FittedModel fit_reml(std::shared_ptr<const GroupedData> data);
FittedModel fit_reml(const GroupedData& data);

/// b_i = D Z_i' V_i^-1 (y_i - X_i beta), cluster order.
std::vector<VectorXd> eblups(const FittedModel& model);

/// Lower triangle of D (row-major) labelled var_<name> / cov_<a>_<b>, then sigma2.
VarianceComponents variance_components(const FittedModel& model);

}  // namespace mixedboot
