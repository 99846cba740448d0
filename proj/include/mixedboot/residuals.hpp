#pragma once

#include <iosfwd>
#include <vector>

#include "mixedboot/fitter.hpp"

namespace mixedboot {

enum class ResidualSource { ModelBased, Nonparametric };

struct ResidualSet {
  std::vector<VectorXd> marginal;     // y_i - X_i beta
  std::vector<VectorXd> conditional;  // marginal_i - Z_i u_i
  MatrixXd ranef;                     // g x q, one row per cluster
  ResidualSource source = ResidualSource::ModelBased;
};

struct ReflatedResiduals {
  MatrixXd ranef_star;                // g x q
  std::vector<VectorXd> cond_star;    // pooled scaling, original per-cluster partition
  MatrixXd transform_A;               // q x q
};

/// Marginal residuals, EBLUPs, and conditional residuals of a fit.
ResidualSet model_residuals(const FittedModel& model);

/// Per-cluster least-squares projection of the marginal residuals onto Z_i.
/// Throws SingularClusterDesign naming the cluster when Z_i lacks full rank.
ResidualSet nonparametric_residuals(const FittedModel& model);

/// Centers the random-effect rows and rescales them by A = (L_D L_S^-1)' so
/// that U*'U*/g = D; conditional residuals are pooled, centered, and scaled
/// by sigma / s_e. Zero-variance effects are resampled as exact zeros; a
/// rank-deficient D is matched within its range.
ReflatedResiduals center_and_reflate(const ResidualSet& resids, const FittedModel& model);

/// Long format: cluster_id,row_index,marginal,conditional.
void write_residuals_csv(std::ostream& out, const ResidualSet& resids, const GroupedData& data);
/// One row per cluster: cluster_id then one column per random effect.
void write_ranef_csv(std::ostream& out, const ResidualSet& resids, const GroupedData& data);

}  // namespace mixedboot
