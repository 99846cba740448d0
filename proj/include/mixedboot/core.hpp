#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "mixedboot/random.hpp"
#include "mixedboot/table.hpp"

namespace mixedboot {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Model specification
// ---------------------------------------------------------------------------

// One factor of a model term: a column raised to a power (power 1 for plain
// columns and for categorical columns).
struct TermFactor {
  std::string column;
  int power = 1;

  bool operator==(const TermFactor&) const = default;
};

// A product of factors, e.g. `x`, `x^2`, `a:b`.
struct Term {
  std::vector<TermFactor> factors;

  bool operator==(const Term&) const = default;
};

struct ModelSpec {
  std::string response;
  std::vector<Term> fixed_terms;
  std::vector<Term> random_terms;
  std::string group;
  bool fixed_intercept = true;
  bool random_intercept = true;

  bool operator==(const ModelSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Grouped data
// ---------------------------------------------------------------------------

struct ClusterBlock {
  std::string cluster_id;
  VectorXd y;
  MatrixXd X;
  MatrixXd Z;
  // Row positions in the source table; copied along when rows are resampled.
  std::vector<std::size_t> source_rows;

  std::size_t size() const noexcept { return static_cast<std::size_t>(y.size()); }
};

// Immutable after construction; safe to share across threads.
class GroupedData {
 public:
  // Validates: g >= 2, every cluster nonempty, consistent p and q, and full
  // column rank of the stacked fixed design.
  GroupedData(std::vector<ClusterBlock> clusters, std::vector<std::string> fixed_names,
              std::vector<std::string> random_names);

  const std::vector<ClusterBlock>& clusters() const noexcept { return clusters_; }
  const ClusterBlock& cluster(std::size_t i) const { return clusters_.at(i); }
  std::size_t g() const noexcept { return clusters_.size(); }
  std::size_t n_total() const noexcept { return n_total_; }
  std::size_t p() const noexcept { return fixed_names_.size(); }
  std::size_t q() const noexcept { return random_names_.size(); }
  const std::vector<std::string>& fixed_names() const noexcept { return fixed_names_; }
  const std::vector<std::string>& random_names() const noexcept { return random_names_; }

  MatrixXd stacked_X() const;
  VectorXd stacked_y() const;

  // Same designs, new responses (one vector per cluster, matching sizes).
  GroupedData with_responses(const std::vector<VectorXd>& responses) const;

 private:
  std::vector<ClusterBlock> clusters_;
  std::vector<std::string> fixed_names_;
  std::vector<std::string> random_names_;
  std::size_t n_total_ = 0;
};

// Deterministic text form (cluster order, names, values at full precision).
std::string serialize(const GroupedData& data);

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct Parameters {
  VectorXd beta;
  MatrixXd D;
  double sigma2 = 1.0;

  // Checks symmetry within 1e-12 and sigma2 > 0, clamps eigenvalues of D in
  // [-1e-10, 0) to zero, and rejects anything more negative.
  static Parameters make(VectorXd beta, MatrixXd D, double sigma2);
};

// V_i = Z_i D Z_i' + sigma2 I.
MatrixXd marginal_covariance(const ClusterBlock& block, const Parameters& params);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Rows are grouped by cluster in first-appearance order; categorical columns
// are dummy coded against their lexicographically first level and named
// column ++ level; the intercept column, when enabled, comes first and is
// named "(Intercept)".
GroupedData build_design(const DataTable& table, const ModelSpec& spec);

// Draws b_i ~ N(0, D) then e_i ~ N(0, sigma2 I) for each cluster in order and
// returns X_i beta + Z_i b_i + e_i.
std::vector<VectorXd> simulate_response(const GroupedData& data, const Parameters& params,
                                        RandomStream& rng);

// Symmetric square root of a PSD matrix (negative eigenvalues clamped).
MatrixXd psd_sqrt(const MatrixXd& m);

}  // namespace mixedboot
