#include "mixedboot/fitter.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mixedboot/error.hpp"
#include "mixedboot/nelder_mead.hpp"

namespace mixedboot {

namespace {

// Reusable buffers so repeated criterion evaluations inside the optimizer do
// not allocate per cluster.
struct Workspace {
  MatrixXd M, K, KX, xtvx, tmp_pq;
  VectorXd Ky, xtvy, Kr, ztr;
  Eigen::LLT<MatrixXd> llt_m, llt_x;

  Workspace(Eigen::Index p, Eigen::Index q)
      : M(q, q), K(q, q), KX(q, p), xtvx(p, p), tmp_pq(q, p), Ky(q), xtvy(p), Kr(q), ztr(q), llt_m(q), llt_x(p) {}
};

struct ClusterSums {
  std::vector<double> yty;
};

[[noreturn]] void non_finite(const std::string& what) { throw Error(ErrorCode::NonFiniteObjective, what); }

// Core evaluation. With V* = I + Z L L' Z' and M = I + L' Z'Z L = R R',
// log|V*| = log|M| and V*^-1 = I - Z L M^-1 L' Z', so every per-cluster term
// reduces to q x q and q x p work on the cross products.
ProfiledFit evaluate(const GroupedData& data, const CrossProducts& cp, const std::vector<double>& yty,
                     const MatrixXd& lambda, Workspace& ws) {
  const auto p = static_cast<Eigen::Index>(data.p());
  const auto q = static_cast<Eigen::Index>(data.q());
  const double n = static_cast<double>(data.n_total());
  const double dof = n - static_cast<double>(p);

  double logdet_v = 0.0;
  double ytvy = 0.0;
  ws.xtvx.setZero();
  ws.xtvy.setZero();

  for (std::size_t i = 0; i < cp.blocks.size(); ++i) {
    const auto& b = cp.blocks[i];
    ws.M.noalias() = lambda.transpose() * b.ZtZ * lambda;
    ws.M.diagonal().array() += 1.0;
    ws.llt_m.compute(ws.M);
    if (ws.llt_m.info() != Eigen::Success) non_finite("cluster covariance factorization failed");
    const auto& R = ws.llt_m.matrixLLT();
    for (Eigen::Index k = 0; k < q; ++k) logdet_v += 2.0 * std::log(R(k, k));

    ws.K = lambda.transpose();
    ws.llt_m.matrixL().solveInPlace(ws.K);
    ws.KX.noalias() = ws.K * b.ZtX;
    ws.Ky.noalias() = ws.K * b.Zty;

    ws.xtvx += b.XtX;
    ws.xtvx.noalias() -= ws.KX.transpose() * ws.KX;
    ws.xtvy += b.Xty;
    ws.xtvy.noalias() -= ws.KX.transpose() * ws.Ky;
    ytvy += yty[i] - ws.Ky.squaredNorm();
  }

  ws.llt_x.compute(ws.xtvx);
  if (ws.llt_x.info() != Eigen::Success) non_finite("X' V^-1 X is not positive definite");
  double logdet_x = 0.0;
  const auto& RX = ws.llt_x.matrixLLT();
  for (Eigen::Index k = 0; k < p; ++k) logdet_x += 2.0 * std::log(RX(k, k));

  ProfiledFit fit;
  fit.beta = ws.llt_x.solve(ws.xtvy);
  fit.rss = ytvy - fit.beta.dot(ws.xtvy);
  if (!(fit.rss > 0.0) || !std::isfinite(fit.rss)) non_finite("weighted residual sum of squares is not positive");
  fit.deviance = logdet_v + logdet_x + dof * std::log(fit.rss) + dof * (1.0 - std::log(dof));
  if (!std::isfinite(fit.deviance)) non_finite("criterion overflow");
  fit.xtvx = ws.xtvx;
  return fit;
}

std::vector<double> response_sums(const GroupedData& data) {
  std::vector<double> yty;
  yty.reserve(data.g());
  for (const auto& c : data.clusters()) yty.push_back(c.y.squaredNorm());
  return yty;
}

MatrixXd floored_lambda(const VectorXd& theta, std::size_t q) {
  VectorXd t = theta;
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j <= i; ++j, ++k) {
      if (i == j) t(k) = std::max(t(k), kLogDiagonalFloor);
    }
  }
  return lambda_from_theta(t, q);
}

}  // namespace

// ---------------------------------------------------------------------------

MatrixXd lambda_from_theta(const VectorXd& theta, std::size_t q) {
  if (static_cast<std::size_t>(theta.size()) != theta_size(q)) {
    throw Error(ErrorCode::DimensionMismatch, "theta has length " + std::to_string(theta.size()) + ", expected " +
                                                  std::to_string(theta_size(q)));
  }
  const auto qq = static_cast<Eigen::Index>(q);
  MatrixXd L = MatrixXd::Zero(qq, qq);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < qq; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j, ++k) L(i, j) = (i == j) ? std::exp(theta(k)) : theta(k);
  }
  return L;
}

CrossProducts::CrossProducts(const GroupedData& data) {
  blocks.reserve(data.g());
  for (const auto& c : data.clusters()) {
    Block b;
    b.ZtZ = c.Z.transpose() * c.Z;
    b.ZtX = c.Z.transpose() * c.X;
    b.XtX = c.X.transpose() * c.X;
    b.Zty = c.Z.transpose() * c.y;
    b.Xty = c.X.transpose() * c.y;
    blocks.push_back(std::move(b));
  }
}

ProfiledFit evaluate_profiled(const GroupedData& data, const CrossProducts& cp, const MatrixXd& lambda) {
  Workspace ws(static_cast<Eigen::Index>(data.p()), static_cast<Eigen::Index>(data.q()));
  return evaluate(data, cp, response_sums(data), lambda, ws);
}

double profiled_deviance(const GroupedData& data, const VectorXd& theta) {
  const MatrixXd lambda = lambda_from_theta(theta, data.q());
  return evaluate_profiled(data, CrossProducts(data), lambda).deviance;
}

FittedModel fit_reml(const GroupedData& data) { return fit_reml(std::make_shared<const GroupedData>(data)); }

FittedModel fit_reml(std::shared_ptr<const GroupedData> data) {
  const std::size_t q = data->q();
  const auto p = static_cast<Eigen::Index>(data->p());
  if (data->n_total() <= data->p() + 1) {
    throw Error(ErrorCode::InvalidData, "need more observations than fixed effects plus one");
  }
  const CrossProducts cp(*data);
  const std::vector<double> yty = response_sums(*data);
  Workspace ws(p, static_cast<Eigen::Index>(q));

  auto objective = [&](const VectorXd& theta) {
    try {
      return evaluate(*data, cp, yty, floored_lambda(theta, q), ws).deviance;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteObjective) throw;
      return std::numeric_limits<double>::infinity();
    }
  };

  const auto m = static_cast<Eigen::Index>(theta_size(q));
  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  for (double start_diag : {0.0, std::log(0.1), std::log(10.0)}) {
    VectorXd start = VectorXd::Zero(m);
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < q; ++i) {
      for (std::size_t j = 0; j <= i; ++j, ++k) {
        if (i == j) start(k) = start_diag;
      }
    }
    NelderMeadResult run = nelder_mead(objective, start);
    iterations += run.iterations;
    if (run.value < best.value) best = run;
  }
  // One restart from the winner guards against a collapsed simplex.
  if (std::isfinite(best.value)) {
    NelderMeadResult polish = nelder_mead(objective, best.x, NelderMeadOptions{.initial_step = 0.05});
    iterations += polish.iterations;
    if (polish.value <= best.value) {
      polish.converged = polish.converged || best.converged;
      best = polish;
    }
  }
  if (!std::isfinite(best.value)) {
    throw Error(ErrorCode::NonFiniteObjective, "criterion is not finite at any start");
  }

  FittedModel model;
  model.data = data;
  model.theta = best.x;
  model.converged = best.converged;
  model.n_iterations = iterations;

  MatrixXd lambda = floored_lambda(best.x, q);
  {
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < q; ++i) {
      for (std::size_t j = 0; j <= i; ++j, ++k) {
        if (i == j && best.x(k) <= kLogDiagonalFloor) {
          model.theta(k) = kLogDiagonalFloor;
          lambda(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
          model.boundary = true;
        }
      }
    }
  }
  const ProfiledFit at_opt = evaluate(*data, cp, yty, lambda, ws);
  const double dof = static_cast<double>(data->n_total()) - static_cast<double>(p);
  const double sigma2 = at_opt.rss / dof;
  MatrixXd D = sigma2 * lambda * lambda.transpose();
  D = 0.5 * (D + D.transpose());

  model.lambda = lambda;
  model.params = Parameters{at_opt.beta, D, sigma2};
  model.reml_criterion = at_opt.deviance + dof * std::log(2.0 * std::numbers::pi);
  MatrixXd cov = sigma2 * at_opt.xtvx.llt().solve(MatrixXd::Identity(p, p));
  model.fixed_cov = 0.5 * (cov + cov.transpose());
  return model;
}

std::vector<VectorXd> eblups(const FittedModel& model) {
  const auto& data = *model.data;
  const auto q = static_cast<Eigen::Index>(data.q());
  const MatrixXd& L = model.lambda;
  std::vector<VectorXd> out;
  out.reserve(data.g());
  for (const auto& c : data.clusters()) {
    const VectorXd r = c.y - c.X * model.params.beta;
    // D Z' V^-1 r = L M^-1 L' Z' r with M = I + L' Z'Z L.
    MatrixXd M = L.transpose() * (c.Z.transpose() * c.Z) * L;
    M.diagonal().array() += 1.0;
    const VectorXd rhs = L.transpose() * (c.Z.transpose() * r);
    VectorXd b = L * M.llt().solve(rhs);
    if (b.size() != q) b = VectorXd::Zero(q);
    out.push_back(std::move(b));
  }
  return out;
}

VarianceComponents variance_components(const FittedModel& model) {
  const auto& names = model.data->random_names();
  auto strip = [](std::string s) {
    if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
    return s;
  };
  VarianceComponents vc;
  const MatrixXd& D = model.params.D;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const auto& ni = names[static_cast<std::size_t>(i)];
      const auto& nj = names[static_cast<std::size_t>(j)];
      if (i == j) {
        vc.entries.emplace_back("var_" + strip(ni), D(i, i));
      } else {
        vc.entries.emplace_back("cov_" + strip(nj) + "_" + strip(ni), D(i, j));
      }
    }
  }
  vc.entries.emplace_back("sigma2", model.params.sigma2);
  vc.nu = vc.entries.size();
  return vc;
}

}  // namespace mixedboot
