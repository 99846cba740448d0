#pragma once

#include <Eigen/Dense>
#include <functional>

namespace mixedboot {

struct NelderMeadOptions {
  double ftol_rel = 1e-10;   // spread of simplex values relative to the best value
  double xtol = 1e-8;        // max coordinate distance of any vertex from the best
  int max_iterations = 2000;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Unconstrained derivative-free minimization. Non-finite objective values
// are treated as +inf so the simplex steps away from them. Convergence needs
// both the value spread and the simplex size below tolerance.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options = {});

}  // namespace mixedboot
