#include "mixedboot/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mixedboot/error.hpp"

namespace mixedboot {

namespace {

struct DesignColumn {
  std::string name;
  std::vector<double> values;
};

std::vector<DesignColumn> expand_factor(const DataTable& table, const TermFactor& factor) {
  const Column& col = table.column(factor.column);
  if (col.numeric) {
    DesignColumn out;
    out.name = factor.power == 1 ? col.name : col.name + "^" + std::to_string(factor.power);
    out.values.reserve(col.values.size());
    for (double v : col.values) out.values.push_back(std::pow(v, factor.power));
    return {std::move(out)};
  }
  if (factor.power != 1) {
    throw Error(ErrorCode::InvalidData, "power applied to categorical column '" + col.name + "'");
  }
  std::vector<std::string> levels = col.labels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<DesignColumn> out;
  for (std::size_t l = 1; l < levels.size(); ++l) {
    DesignColumn dummy;
    dummy.name = col.name + levels[l];
    dummy.values.reserve(col.labels.size());
    for (const auto& label : col.labels) dummy.values.push_back(label == levels[l] ? 1.0 : 0.0);
    out.push_back(std::move(dummy));
  }
  return out;
}

std::vector<DesignColumn> expand_term(const DataTable& table, const Term& term) {
  std::vector<DesignColumn> acc;
  for (const auto& factor : term.factors) {
    auto next = expand_factor(table, factor);
    if (acc.empty()) {
      acc = std::move(next);
      continue;
    }
    std::vector<DesignColumn> product;
    for (const auto& a : acc) {
      for (const auto& b : next) {
        DesignColumn c;
        c.name = a.name + ":" + b.name;
        c.values.resize(a.values.size());
        for (std::size_t r = 0; r < a.values.size(); ++r) c.values[r] = a.values[r] * b.values[r];
        product.push_back(std::move(c));
      }
    }
    acc = std::move(product);
  }
  return acc;
}

std::vector<DesignColumn> expand_design(const DataTable& table, bool intercept, const std::vector<Term>& terms) {
  std::vector<DesignColumn> columns;
  if (intercept) columns.push_back({"(Intercept)", std::vector<double>(table.rows(), 1.0)});
  for (const auto& term : terms) {
    for (auto& col : expand_term(table, term)) columns.push_back(std::move(col));
  }
  return columns;
}

void check_columns_exist(const DataTable& table, const std::vector<Term>& terms) {
  for (const auto& term : terms) {
    for (const auto& factor : term.factors) table.column(factor.column);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// GroupedData
// ---------------------------------------------------------------------------

GroupedData::GroupedData(std::vector<ClusterBlock> clusters, std::vector<std::string> fixed_names,
                         std::vector<std::string> random_names)
    : clusters_(std::move(clusters)), fixed_names_(std::move(fixed_names)), random_names_(std::move(random_names)) {
  if (clusters_.size() < 2) {
    throw Error(ErrorCode::InvalidData, "at least 2 clusters required, got " + std::to_string(clusters_.size()));
  }
  const auto p = static_cast<Eigen::Index>(fixed_names_.size());
  const auto q = static_cast<Eigen::Index>(random_names_.size());
  if (p == 0) throw Error(ErrorCode::InvalidData, "fixed design has no columns");
  if (q == 0) throw Error(ErrorCode::InvalidData, "random design has no columns");
  for (auto& c : clusters_) {
    if (c.y.size() == 0) throw Error(ErrorCode::EmptyCluster, "cluster '" + c.cluster_id + "' has no rows");
    if (c.X.rows() != c.y.size() || c.Z.rows() != c.y.size()) {
      throw Error(ErrorCode::DimensionMismatch, "row counts of y, X, Z disagree in cluster '" + c.cluster_id + "'");
    }
    if (c.X.cols() != p || c.Z.cols() != q) {
      throw Error(ErrorCode::DimensionMismatch, "design width mismatch in cluster '" + c.cluster_id + "'");
    }
    if (c.source_rows.size() != c.size()) {
      c.source_rows.resize(c.size());
      for (std::size_t r = 0; r < c.size(); ++r) c.source_rows[r] = r;
    }
    n_total_ += c.size();
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(stacked_X());
  if (qr.rank() < p) {
    throw Error(ErrorCode::RankDeficientDesign,
                "fixed design has rank " + std::to_string(qr.rank()) + " < p = " + std::to_string(p));
  }
}

MatrixXd GroupedData::stacked_X() const {
  MatrixXd X(static_cast<Eigen::Index>(n_total_), static_cast<Eigen::Index>(p()));
  Eigen::Index row = 0;
  for (const auto& c : clusters_) {
    X.middleRows(row, c.X.rows()) = c.X;
    row += c.X.rows();
  }
  return X;
}

VectorXd GroupedData::stacked_y() const {
  VectorXd y(static_cast<Eigen::Index>(n_total_));
  Eigen::Index row = 0;
  for (const auto& c : clusters_) {
    y.segment(row, c.y.size()) = c.y;
    row += c.y.size();
  }
  return y;
}

GroupedData GroupedData::with_responses(const std::vector<VectorXd>& responses) const {
  if (responses.size() != clusters_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "response count does not match cluster count");
  }
  GroupedData copy = *this;
  for (std::size_t i = 0; i < clusters_.size(); ++i) {
    if (responses[i].size() != clusters_[i].y.size()) {
      throw Error(ErrorCode::DimensionMismatch, "response length mismatch in cluster '" + clusters_[i].cluster_id + "'");
    }
    copy.clusters_[i].y = responses[i];
  }
  return copy;
}

std::string serialize(const GroupedData& data) {
  std::ostringstream os;
  os.precision(17);
  os << "g=" << data.g() << " n=" << data.n_total() << " p=" << data.p() << " q=" << data.q() << "\n";
  os << "fixed:";
  for (const auto& n : data.fixed_names()) os << " " << n;
  os << "\nrandom:";
  for (const auto& n : data.random_names()) os << " " << n;
  os << "\n";
  for (const auto& c : data.clusters()) {
    os << "cluster " << c.cluster_id << " " << c.size() << "\n";
    for (Eigen::Index r = 0; r < c.y.size(); ++r) {
      os << c.source_rows[static_cast<std::size_t>(r)] << " " << c.y(r) << " |";
      for (Eigen::Index j = 0; j < c.X.cols(); ++j) os << " " << c.X(r, j);
      os << " |";
      for (Eigen::Index j = 0; j < c.Z.cols(); ++j) os << " " << c.Z(r, j);
      os << "\n";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

Parameters Parameters::make(VectorXd beta, MatrixXd D, double sigma2) {
  if (D.rows() != D.cols()) throw Error(ErrorCode::DimensionMismatch, "D must be square");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw Error(ErrorCode::InvalidData, "sigma2 must be positive");
  if ((D - D.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw Error(ErrorCode::InvalidData, "D is not symmetric");
  D = 0.5 * (D + D.transpose());
  if (D.size() > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(D);
    const VectorXd& ev = eig.eigenvalues();
    if (ev.minCoeff() < -1e-10) throw Error(ErrorCode::InvalidData, "D is not positive semidefinite");
    if (ev.minCoeff() < 0.0) {
      D = eig.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
      D = 0.5 * (D + D.transpose());
    }
  }
  return Parameters{std::move(beta), std::move(D), sigma2};
}

MatrixXd marginal_covariance(const ClusterBlock& block, const Parameters& params) {
  MatrixXd V = block.Z * params.D * block.Z.transpose();
  V = 0.5 * (V + V.transpose()).eval();
  V.diagonal().array() += params.sigma2;
  return V;
}

MatrixXd psd_sqrt(const MatrixXd& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

GroupedData build_design(const DataTable& table, const ModelSpec& spec) {
  if (table.rows() == 0) throw Error(ErrorCode::InvalidData, "data table is empty");
  const Column& response = table.column(spec.response);
  const Column& group = table.column(spec.group);
  check_columns_exist(table, spec.fixed_terms);
  check_columns_exist(table, spec.random_terms);
  if (!response.numeric) throw Error(ErrorCode::InvalidData, "response '" + spec.response + "' is not numeric");

  const auto fixed = expand_design(table, spec.fixed_intercept, spec.fixed_terms);
  const auto random = expand_design(table, spec.random_intercept, spec.random_terms);

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto& label = group.labels[r];
    auto [it, inserted] = members.try_emplace(label);
    if (inserted) order.push_back(label);
    it->second.push_back(r);
  }

  std::vector<ClusterBlock> clusters;
  clusters.reserve(order.size());
  for (const auto& id : order) {
    const auto& rows = members.at(id);
    const auto n = static_cast<Eigen::Index>(rows.size());
    ClusterBlock block;
    block.cluster_id = id;
    block.y.resize(n);
    block.X.resize(n, static_cast<Eigen::Index>(fixed.size()));
    block.Z.resize(n, static_cast<Eigen::Index>(random.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t r = rows[static_cast<std::size_t>(i)];
      block.y(i) = response.values[r];
      for (std::size_t j = 0; j < fixed.size(); ++j) block.X(i, static_cast<Eigen::Index>(j)) = fixed[j].values[r];
      for (std::size_t j = 0; j < random.size(); ++j) block.Z(i, static_cast<Eigen::Index>(j)) = random[j].values[r];
    }
    block.source_rows = rows;
    clusters.push_back(std::move(block));
  }

  std::vector<std::string> fixed_names, random_names;
  for (const auto& c : fixed) fixed_names.push_back(c.name);
  for (const auto& c : random) random_names.push_back(c.name);
  return GroupedData(std::move(clusters), std::move(fixed_names), std::move(random_names));
}

std::vector<VectorXd> simulate_response(const GroupedData& data, const Parameters& params, RandomStream& rng) {
  const auto p = static_cast<Eigen::Index>(data.p());
  const auto q = static_cast<Eigen::Index>(data.q());
  if (params.beta.size() != p || params.D.rows() != q || params.D.cols() != q) {
    throw Error(ErrorCode::DimensionMismatch, "parameters do not match the design dimensions");
  }
  const MatrixXd root = psd_sqrt(params.D);
  const double sigma = std::sqrt(params.sigma2);

  std::vector<VectorXd> out;
  out.reserve(data.g());
  VectorXd z(q);
  for (const auto& c : data.clusters()) {
    for (Eigen::Index k = 0; k < q; ++k) z(k) = standard_normal(rng);
    VectorXd y = c.X * params.beta + c.Z * (root * z);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) += sigma * standard_normal(rng);
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace mixedboot
