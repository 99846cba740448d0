#include "mixedboot/residuals.hpp"

#include <cmath>
#include <ostream>

#include "mixedboot/error.hpp"

namespace mixedboot {

ResidualSet model_residuals(const FittedModel& model) {
  const auto& data = *model.data;
  ResidualSet out;
  out.source = ResidualSource::ModelBased;
  const auto b = eblups(model);
  out.ranef.resize(static_cast<Eigen::Index>(data.g()), static_cast<Eigen::Index>(data.q()));
  for (std::size_t i = 0; i < data.g(); ++i) {
    const auto& c = data.cluster(i);
    VectorXd r = c.y - c.X * model.params.beta;
    out.ranef.row(static_cast<Eigen::Index>(i)) = b[i].transpose();
    out.conditional.push_back(r - c.Z * b[i]);
    out.marginal.push_back(std::move(r));
  }
  return out;
}

ResidualSet nonparametric_residuals(const FittedModel& model) {
  const auto& data = *model.data;
  const auto q = static_cast<Eigen::Index>(data.q());
  ResidualSet out;
  out.source = ResidualSource::Nonparametric;
  out.ranef.resize(static_cast<Eigen::Index>(data.g()), q);
  for (std::size_t i = 0; i < data.g(); ++i) {
    const auto& c = data.cluster(i);
    VectorXd r = c.y - c.X * model.params.beta;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(c.Z);
    if (c.Z.rows() < q || qr.rank() < q) {
      throw Error(ErrorCode::SingularClusterDesign,
                  "random-effects design of cluster '" + c.cluster_id + "' is not of full column rank");
    }
    const VectorXd b = (c.Z.transpose() * c.Z).ldlt().solve(c.Z.transpose() * r);
    out.ranef.row(static_cast<Eigen::Index>(i)) = b.transpose();
    out.conditional.push_back(r - c.Z * b);
    out.marginal.push_back(std::move(r));
  }
  return out;
}

namespace {

// Relative eigenvalue below which the estimated covariance counts as singular.
constexpr double kRankTolerance = 1e-10;

}  // namespace

ReflatedResiduals center_and_reflate(const ResidualSet& resids, const FittedModel& model) {
  const MatrixXd& D = model.params.D;
  const auto g = resids.ranef.rows();
  const auto q = resids.ranef.cols();
  if (g <= q) throw Error(ErrorCode::SingularEmpiricalCovariance, "need more clusters than random effects");

  MatrixXd U = resids.ranef.rowwise() - resids.ranef.colwise().mean();

  // Effects with zero estimated variance stay exactly zero.
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < q; ++j) {
    if (D(j, j) > 0.0) {
      active.push_back(j);
    } else {
      U.col(j).setZero();
    }
  }

  ReflatedResiduals out;
  out.transform_A = MatrixXd::Zero(q, q);
  if (!active.empty()) {
    const auto a = static_cast<Eigen::Index>(active.size());
    MatrixXd Ua(g, a), Da(a, a);
    for (Eigen::Index j = 0; j < a; ++j) {
      Ua.col(j) = U.col(active[static_cast<std::size_t>(j)]);
      for (Eigen::Index k = 0; k < a; ++k) {
        Da(j, k) = D(active[static_cast<std::size_t>(j)], active[static_cast<std::size_t>(k)]);
      }
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig_d(Da);
    const VectorXd& ev = eig_d.eigenvalues();
    MatrixXd Aa;
    if (ev(0) > kRankTolerance * ev(a - 1)) {
      const MatrixXd S = Ua.transpose() * Ua / static_cast<double>(g);
      Eigen::LLT<MatrixXd> llt_s(S);
      if (llt_s.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularEmpiricalCovariance, "empirical covariance of the random effects is singular");
      }
      Eigen::LLT<MatrixXd> llt_d(Da);
      if (llt_d.info() != Eigen::Success) {
        throw Error(ErrorCode::DegenerateTarget, "estimated random-effects covariance is not positive definite");
      }
      const MatrixXd L_D = llt_d.matrixL();
      // A = (L_D L_S^-1)' = L_S^-T L_D'
      Aa = llt_s.matrixU().solve(MatrixXd(L_D.transpose()));
    } else {
      // Rank-deficient D = W W' (W is a x r): reflate the coordinates
      // T = U W (W'W)^-1 so that T*'T*/g = I, then map back through W'.
      Eigen::Index r = 0;
      while (r < a && ev(a - 1 - r) > kRankTolerance * ev(a - 1)) ++r;
      const MatrixXd W = eig_d.eigenvectors().rightCols(r) * ev.tail(r).cwiseSqrt().asDiagonal();
      const MatrixXd P = W * (W.transpose() * W).inverse();
      const MatrixXd T = Ua * P;
      Eigen::LLT<MatrixXd> llt_t(T.transpose() * T / static_cast<double>(g));
      if (llt_t.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularEmpiricalCovariance, "empirical covariance of the random effects is singular");
      }
      Aa = P * llt_t.matrixU().solve(MatrixXd(W.transpose()));
    }
    for (Eigen::Index j = 0; j < a; ++j) {
      for (Eigen::Index k = 0; k < a; ++k) {
        out.transform_A(active[static_cast<std::size_t>(j)], active[static_cast<std::size_t>(k)]) = Aa(j, k);
      }
    }
  }
  out.ranef_star = U * out.transform_A;

  double total = 0.0;
  std::size_t n = 0;
  for (const auto& e : resids.conditional) {
    total += e.sum();
    n += static_cast<std::size_t>(e.size());
  }
  const double mean = total / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& e : resids.conditional) ss += (e.array() - mean).square().sum();
  const double s_e = std::sqrt(ss / static_cast<double>(n));
  const double scale = s_e > 0.0 ? std::sqrt(model.params.sigma2) / s_e : 0.0;
  out.cond_star.reserve(resids.conditional.size());
  for (const auto& e : resids.conditional) out.cond_star.push_back(((e.array() - mean) * scale).matrix());
  return out;
}

void write_residuals_csv(std::ostream& out, const ResidualSet& resids, const GroupedData& data) {
  const auto old = out.precision(17);
  out << "cluster_id,row_index,marginal,conditional\n";
  for (std::size_t i = 0; i < data.g(); ++i) {
    const auto& c = data.cluster(i);
    for (Eigen::Index r = 0; r < c.y.size(); ++r) {
      out << c.cluster_id << ',' << c.source_rows[static_cast<std::size_t>(r)] << ',' << resids.marginal[i](r)
          << ',' << resids.conditional[i](r) << '\n';
    }
  }
  out.precision(old);
}

void write_ranef_csv(std::ostream& out, const ResidualSet& resids, const GroupedData& data) {
  const auto old = out.precision(17);
  out << "cluster_id";
  for (const auto& name : data.random_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.g(); ++i) {
    out << data.cluster(i).cluster_id;
    for (Eigen::Index j = 0; j < resids.ranef.cols(); ++j) out << ',' << resids.ranef(static_cast<Eigen::Index>(i), j);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace mixedboot
