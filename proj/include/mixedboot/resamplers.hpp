#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixedboot/fitter.hpp"
#include "mixedboot/random.hpp"
#include "mixedboot/residuals.hpp"

namespace mixedboot {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class BootstrapType { Case, Parametric, Residual, Reb, Wild };
enum class RebVariant { Reb0 = 0, Reb1 = 1, Reb2 = 2 };
enum class Hccme { HC2, HC3 };
enum class AuxDist { F1, F2 };

std::string to_string(BootstrapType type);
BootstrapType parse_bootstrap_type(const std::string& text);

/// Which levels are resampled by the cases bootstrap.
struct CaseFlags {
  bool rows = false;      // level 1: observations within clusters
  bool clusters = false;  // level 2: whole clusters
};

/// Validated at construction: the per-type options are required for their
/// type and rejected otherwise.
class BootstrapConfig {
 public:
  BootstrapConfig(BootstrapType type, std::size_t B, std::uint64_t master_seed,
                  std::optional<CaseFlags> resample = std::nullopt, std::optional<RebVariant> reb = std::nullopt,
                  std::optional<Hccme> hccme = std::nullopt, std::optional<AuxDist> aux = std::nullopt);

  static BootstrapConfig cases(std::size_t B, CaseFlags flags, std::uint64_t seed);
  static BootstrapConfig parametric(std::size_t B, std::uint64_t seed);
  static BootstrapConfig residual(std::size_t B, std::uint64_t seed);
  static BootstrapConfig reb(std::size_t B, RebVariant variant, std::uint64_t seed);
  static BootstrapConfig wild(std::size_t B, Hccme hccme, AuxDist aux, std::uint64_t seed);

  BootstrapType type() const noexcept { return type_; }
  std::size_t B() const noexcept { return B_; }
  std::uint64_t master_seed() const noexcept { return seed_; }
  const std::optional<CaseFlags>& resample() const noexcept { return resample_; }
  const std::optional<RebVariant>& reb_variant() const noexcept { return reb_; }
  const std::optional<Hccme>& hccme() const noexcept { return hccme_; }
  const std::optional<AuxDist>& aux_dist() const noexcept { return aux_; }

  std::string describe() const;

 private:
  BootstrapType type_;
  std::size_t B_;
  std::uint64_t seed_;
  std::optional<CaseFlags> resample_;
  std::optional<RebVariant> reb_;
  std::optional<Hccme> hccme_;
  std::optional<AuxDist> aux_;
};

// ---------------------------------------------------------------------------
// Statistics and results
// ---------------------------------------------------------------------------

enum class ColumnClass { FixedEffect, VarianceComponent };

struct NamedVector {
  std::vector<std::string> names;
  VectorXd values;
  // Empty for untagged statistics; otherwise one entry per value.
  std::vector<ColumnClass> classes;
};

using StatisticFn = std::function<NamedVector(const FittedModel&)>;

struct ReplicateLog {
  std::vector<std::string> messages;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;

  bool empty() const noexcept { return messages.empty() && warnings.empty() && errors.empty(); }
};

struct StatSummary {
  std::string term;
  double observed = 0.0;
  double rep_mean = 0.0;
  double se = 0.0;
  double bias = 0.0;
};

struct BootstrapResult {
  NamedVector observed;
  MatrixXd replicates;                      // B x p; rows flagged missing hold NaN
  std::vector<char> missing;                // one flag per row
  std::vector<StatSummary> stats;
  std::size_t B = 0;
  BootstrapType type = BootstrapType::Parametric;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> replicate_index;  // original replicate number of each row
  std::vector<ReplicateLog> logs;
  std::shared_ptr<const FittedModel> model;
  std::shared_ptr<const GroupedData> data;
  std::string call;

  std::size_t n_ok() const noexcept;
  /// Populated rows only, in row order.
  MatrixXd ok_replicates() const;
};

/// Per-column (observed, mean, sd with divisor B_ok - 1, bias) over populated
/// rows. se is NaN when fewer than two rows are populated.
std::vector<StatSummary> compute_stats(const NamedVector& observed, const MatrixXd& replicates,
                                       const std::vector<char>& missing);

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Cases bootstrap draw. With clusters resampled the output has g clusters
/// with fresh ids "1".."g"; rows-only keeps cluster identities.
GroupedData case_resample(const GroupedData& data, CaseFlags flags, RandomStream& rng);

std::vector<VectorXd> parametric_resample(const FittedModel& model, RandomStream& rng);

/// g rows of U* with replacement; each cluster's errors drawn from the pooled
/// reflated conditional residuals.
std::vector<VectorXd> residual_resample(const FittedModel& model, const ReflatedResiduals& reflated,
                                        RandomStream& rng);
std::vector<VectorXd> residual_draw(const std::vector<ClusterBlock>& clusters, const VectorXd& beta,
                                    const MatrixXd& ranef_pool, const std::vector<VectorXd>& cond_pool,
                                    RandomStream& rng);

/// Random-effect and error pools for the REB bootstrap.
struct RebPools {
  MatrixXd ranef;                  // g x q
  std::vector<VectorXd> errors;    // one block per cluster
};

RebPools make_reb_pools(const FittedModel& model, RebVariant variant);

/// Donor clusters used for one REB draw, for inspection.
struct RebTrace {
  std::vector<std::size_t> ranef_donor;
  std::vector<std::size_t> error_donor;
};

std::vector<VectorXd> reb_draw(const std::vector<ClusterBlock>& clusters, const VectorXd& beta,
                               const RebPools& pools, RandomStream& rng, RebTrace* trace = nullptr);
std::vector<VectorXd> reb_resample(const FittedModel& model, const RebPools& pools, RandomStream& rng);
/// Variants 0 and 1 only; variant 2 is a post-processing of a REB/0 result.
std::vector<VectorXd> reb_resample(const FittedModel& model, RebVariant variant, RandomStream& rng);

/// Golden-ratio two-point (F1) or Rademacher (F2) draw.
double draw_auxiliary(AuxDist dist, RandomStream& rng);

/// Leverage-adjusted marginal residuals, one vector per cluster.
std::vector<VectorXd> wild_residuals(const FittedModel& model, Hccme hccme);
std::vector<VectorXd> wild_draw(const FittedModel& model, const std::vector<VectorXd>& adjusted, AuxDist aux,
                                RandomStream& rng);
std::vector<VectorXd> wild_resample(const FittedModel& model, Hccme hccme, AuxDist aux, RandomStream& rng);

/// Diagonal of the stacked-design hat matrix X (X'X)^-1 X', cluster order.
VectorXd hat_diagonal(const GroupedData& data);

// ---------------------------------------------------------------------------
// REB/2 post-processing
// ---------------------------------------------------------------------------

/// Log, whiten with the symmetric inverse square root of the column
/// covariance, rescale by the column sd, re-add the column mean, exponentiate.
MatrixXd uncorrelate_varcomps(const MatrixXd& replicates);

/// Mean correction of fixed-effect columns and ratio correction of
/// variance-component columns; stats recomputed.
BootstrapResult recenter_estimates(const BootstrapResult& result);

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Runs all B replicates sequentially.
BootstrapResult bootstrap(std::shared_ptr<const FittedModel> model, const StatisticFn& f,
                          const BootstrapConfig& config);
BootstrapResult bootstrap(const FittedModel& model, const StatisticFn& f, const BootstrapConfig& config);

/// Replicates {shard, shard + n_shards, ...} only, without REB/2
/// post-processing. Row b of the output is replicate replicate_index[b].
BootstrapResult bootstrap_shard(std::shared_ptr<const FittedModel> model, const StatisticFn& f,
                                const BootstrapConfig& config, std::size_t shard, std::size_t n_shards);

/// Shards run on `workers` threads and are merged by replicate index, so the
/// output equals the sequential result for any worker count.
BootstrapResult bootstrap_parallel(std::shared_ptr<const FittedModel> model, const StatisticFn& f,
                                   const BootstrapConfig& config, std::size_t workers);

/// Interleaves shard results back into replicate order.
BootstrapResult merge_shards(std::vector<BootstrapResult> shards);

}  // namespace mixedboot
