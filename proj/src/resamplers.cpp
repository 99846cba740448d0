#include "mixedboot/resamplers.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "mixedboot/error.hpp"

namespace mixedboot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

std::string to_string(BootstrapType type) {
  switch (type) {
    case BootstrapType::Case: return "case";
    case BootstrapType::Parametric: return "parametric";
    case BootstrapType::Residual: return "residual";
    case BootstrapType::Reb: return "reb";
    case BootstrapType::Wild: return "wild";
  }
  return "unknown";
}

BootstrapType parse_bootstrap_type(const std::string& text) {
  for (auto t : {BootstrapType::Case, BootstrapType::Parametric, BootstrapType::Residual, BootstrapType::Reb,
                 BootstrapType::Wild}) {
    if (to_string(t) == text) return t;
  }
  config_error("unknown bootstrap type '" + text + "'");
}

BootstrapConfig::BootstrapConfig(BootstrapType type, std::size_t B, std::uint64_t master_seed,
                                 std::optional<CaseFlags> resample, std::optional<RebVariant> reb,
                                 std::optional<Hccme> hccme, std::optional<AuxDist> aux)
    : type_(type), B_(B), seed_(master_seed), resample_(resample), reb_(reb), hccme_(hccme), aux_(aux) {
  if (B_ < 1) config_error("B must be at least 1");
  const bool is_case = type_ == BootstrapType::Case;
  const bool is_reb = type_ == BootstrapType::Reb;
  const bool is_wild = type_ == BootstrapType::Wild;
  if (is_case && !resample_) config_error("type 'case' requires resample flags");
  if (is_case && !resample_->rows && !resample_->clusters) config_error("resample flags must select at least one level");
  if (!is_case && resample_) config_error("resample flags apply only to type 'case'");
  if (is_reb && !reb_) config_error("type 'reb' requires a REB variant");
  if (!is_reb && reb_) config_error("REB variant applies only to type 'reb'");
  if (is_wild && (!hccme_ || !aux_)) config_error("type 'wild' requires both hccme and aux_dist");
  if (!is_wild && (hccme_ || aux_)) config_error("hccme and aux_dist apply only to type 'wild'");
}

BootstrapConfig BootstrapConfig::cases(std::size_t B, CaseFlags flags, std::uint64_t seed) {
  return {BootstrapType::Case, B, seed, flags};
}
BootstrapConfig BootstrapConfig::parametric(std::size_t B, std::uint64_t seed) {
  return {BootstrapType::Parametric, B, seed};
}
BootstrapConfig BootstrapConfig::residual(std::size_t B, std::uint64_t seed) {
  return {BootstrapType::Residual, B, seed};
}
BootstrapConfig BootstrapConfig::reb(std::size_t B, RebVariant variant, std::uint64_t seed) {
  return {BootstrapType::Reb, B, seed, std::nullopt, variant};
}
BootstrapConfig BootstrapConfig::wild(std::size_t B, Hccme hccme, AuxDist aux, std::uint64_t seed) {
  return {BootstrapType::Wild, B, seed, std::nullopt, std::nullopt, hccme, aux};
}

std::string BootstrapConfig::describe() const {
  std::ostringstream os;
  os << "bootstrap(type = \"" << to_string(type_) << "\", B = " << B_;
  if (resample_) {
    os << ", resample = c(" << (resample_->rows ? "TRUE" : "FALSE") << ", " << (resample_->clusters ? "TRUE" : "FALSE")
       << ")";
  }
  if (reb_) os << ", reb_type = " << static_cast<int>(*reb_);
  if (hccme_) os << ", hccme = \"" << (*hccme_ == Hccme::HC2 ? "hc2" : "hc3") << "\"";
  if (aux_) os << ", aux.dist = \"" << (*aux_ == AuxDist::F1 ? "f1" : "f2") << "\"";
  os << ", seed = " << seed_ << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

std::size_t BootstrapResult::n_ok() const noexcept {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), 0));
}

MatrixXd BootstrapResult::ok_replicates() const {
  MatrixXd out(static_cast<Eigen::Index>(n_ok()), replicates.cols());
  Eigen::Index r = 0;
  for (Eigen::Index b = 0; b < replicates.rows(); ++b) {
    if (!missing[static_cast<std::size_t>(b)]) out.row(r++) = replicates.row(b);
  }
  return out;
}

std::vector<StatSummary> compute_stats(const NamedVector& observed, const MatrixXd& replicates,
                                       const std::vector<char>& missing) {
  std::vector<StatSummary> out;
  const auto p = replicates.cols();
  for (Eigen::Index j = 0; j < p; ++j) {
    StatSummary s;
    s.term = observed.names[static_cast<std::size_t>(j)];
    s.observed = observed.values(j);
    double sum = 0.0;
    std::size_t n = 0;
    for (Eigen::Index b = 0; b < replicates.rows(); ++b) {
      if (missing[static_cast<std::size_t>(b)]) continue;
      sum += replicates(b, j);
      ++n;
    }
    s.rep_mean = n > 0 ? sum / static_cast<double>(n) : kNaN;
    if (n >= 2) {
      double ss = 0.0;
      for (Eigen::Index b = 0; b < replicates.rows(); ++b) {
        if (missing[static_cast<std::size_t>(b)]) continue;
        const double d = replicates(b, j) - s.rep_mean;
        ss += d * d;
      }
      s.se = std::sqrt(ss / static_cast<double>(n - 1));
    } else {
      s.se = kNaN;
    }
    s.bias = s.rep_mean - s.observed;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace {

ClusterBlock resample_rows(const ClusterBlock& src, RandomStream& rng) {
  const std::size_t n = src.size();
  ClusterBlock out;
  out.cluster_id = src.cluster_id;
  out.y.resize(src.y.size());
  out.X.resize(src.X.rows(), src.X.cols());
  out.Z.resize(src.Z.rows(), src.Z.cols());
  out.source_rows.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto pick = static_cast<Eigen::Index>(uniform_index(rng, n));
    const auto row = static_cast<Eigen::Index>(r);
    out.y(row) = src.y(pick);
    out.X.row(row) = src.X.row(pick);
    out.Z.row(row) = src.Z.row(pick);
    out.source_rows[r] = src.source_rows[static_cast<std::size_t>(pick)];
  }
  return out;
}

VectorXd flatten(const std::vector<VectorXd>& parts) {
  Eigen::Index n = 0;
  for (const auto& v : parts) n += v.size();
  VectorXd out(n);
  Eigen::Index at = 0;
  for (const auto& v : parts) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

}  // namespace

GroupedData case_resample(const GroupedData& data, CaseFlags flags, RandomStream& rng) {
  if (!flags.rows && !flags.clusters) config_error("resample flags must select at least one level");
  const std::size_t g = data.g();
  std::vector<ClusterBlock> out;
  out.reserve(g);
  if (flags.clusters) {
    std::vector<std::size_t> picks(g);
    for (auto& k : picks) k = uniform_index(rng, g);
    for (std::size_t i = 0; i < g; ++i) {
      ClusterBlock block = flags.rows ? resample_rows(data.cluster(picks[i]), rng) : data.cluster(picks[i]);
      block.cluster_id = std::to_string(i + 1);
      out.push_back(std::move(block));
    }
  } else {
    for (const auto& c : data.clusters()) out.push_back(resample_rows(c, rng));
  }
  return GroupedData(std::move(out), data.fixed_names(), data.random_names());
}

std::vector<VectorXd> parametric_resample(const FittedModel& model, RandomStream& rng) {
  return simulate_response(*model.data, model.params, rng);
}

std::vector<VectorXd> residual_draw(const std::vector<ClusterBlock>& clusters, const VectorXd& beta,
                                    const MatrixXd& ranef_pool, const std::vector<VectorXd>& cond_pool,
                                    RandomStream& rng) {
  const VectorXd errors = flatten(cond_pool);
  const auto pool_rows = static_cast<std::size_t>(ranef_pool.rows());
  const auto n_errors = static_cast<std::size_t>(errors.size());
  std::vector<Eigen::Index> picks(clusters.size());
  for (auto& k : picks) k = static_cast<Eigen::Index>(uniform_index(rng, pool_rows));

  std::vector<VectorXd> out;
  out.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& c = clusters[i];
    VectorXd y = c.X * beta + c.Z * ranef_pool.row(picks[i]).transpose();
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) += errors(static_cast<Eigen::Index>(uniform_index(rng, n_errors)));
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<VectorXd> residual_resample(const FittedModel& model, const ReflatedResiduals& reflated,
                                        RandomStream& rng) {
  return residual_draw(model.data->clusters(), model.params.beta, reflated.ranef_star, reflated.cond_star, rng);
}

RebPools make_reb_pools(const FittedModel& model, RebVariant variant) {
  ResidualSet np = nonparametric_residuals(model);
  if (variant == RebVariant::Reb1) {
    ReflatedResiduals reflated = center_and_reflate(np, model);
    return RebPools{std::move(reflated.ranef_star), std::move(reflated.cond_star)};
  }
  return RebPools{std::move(np.ranef), std::move(np.conditional)};
}

std::vector<VectorXd> reb_draw(const std::vector<ClusterBlock>& clusters, const VectorXd& beta,
                               const RebPools& pools, RandomStream& rng, RebTrace* trace) {
  const std::size_t g = clusters.size();
  const auto pool_rows = static_cast<std::size_t>(pools.ranef.rows());
  std::vector<std::size_t> ranef_donor(g), error_donor(g);
  for (auto& k : ranef_donor) k = uniform_index(rng, pool_rows);
  for (auto& k : error_donor) k = uniform_index(rng, pools.errors.size());

  std::vector<VectorXd> out;
  out.reserve(g);
  for (std::size_t i = 0; i < g; ++i) {
    const auto& c = clusters[i];
    const VectorXd& donor = pools.errors[error_donor[i]];
    const auto donor_n = static_cast<std::size_t>(donor.size());
    VectorXd y = c.X * beta + c.Z * pools.ranef.row(static_cast<Eigen::Index>(ranef_donor[i])).transpose();
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) += donor(static_cast<Eigen::Index>(uniform_index(rng, donor_n)));
    out.push_back(std::move(y));
  }
  if (trace) *trace = RebTrace{std::move(ranef_donor), std::move(error_donor)};
  return out;
}

std::vector<VectorXd> reb_resample(const FittedModel& model, const RebPools& pools, RandomStream& rng) {
  return reb_draw(model.data->clusters(), model.params.beta, pools, rng);
}

std::vector<VectorXd> reb_resample(const FittedModel& model, RebVariant variant, RandomStream& rng) {
  if (variant == RebVariant::Reb2) {
    config_error("REB/2 is a post-processing of a full REB/0 run; use bootstrap()");
  }
  return reb_resample(model, make_reb_pools(model, variant), rng);
}

double draw_auxiliary(AuxDist dist, RandomStream& rng) {
  if (dist == AuxDist::F2) return (rng() >> 63) != 0 ? 1.0 : -1.0;
  static const double root5 = std::sqrt(5.0);
  static const double p_low = (root5 + 1.0) / (2.0 * root5);
  return uniform01(rng) < p_low ? -(root5 - 1.0) / 2.0 : (root5 + 1.0) / 2.0;
}

VectorXd hat_diagonal(const GroupedData& data) {
  const MatrixXd X = data.stacked_X();
  Eigen::LLT<MatrixXd> llt(X.transpose() * X);
  // h_jj = || R^-T x_j ||^2 with X'X = R'R
  const MatrixXd W = llt.matrixL().solve(X.transpose());
  return W.colwise().squaredNorm().transpose();
}

std::vector<VectorXd> wild_residuals(const FittedModel& model, Hccme hccme) {
  const auto& data = *model.data;
  if (data.n_total() <= data.p()) throw Error(ErrorCode::LeverageOne, "n_total must exceed p");
  const VectorXd h = hat_diagonal(data);
  std::vector<VectorXd> out;
  out.reserve(data.g());
  Eigen::Index at = 0;
  for (const auto& c : data.clusters()) {
    VectorXd v = c.y - c.X * model.params.beta;
    for (Eigen::Index r = 0; r < v.size(); ++r, ++at) {
      const double one_minus_h = 1.0 - h(at);
      if (one_minus_h <= 1e-12) {
        throw Error(ErrorCode::LeverageOne, "observation in cluster '" + c.cluster_id + "' has leverage one");
      }
      v(r) /= hccme == Hccme::HC2 ? std::sqrt(one_minus_h) : one_minus_h;
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<VectorXd> wild_draw(const FittedModel& model, const std::vector<VectorXd>& adjusted, AuxDist aux,
                                RandomStream& rng) {
  const auto& data = *model.data;
  std::vector<double> w(data.g());
  for (auto& wi : w) wi = draw_auxiliary(aux, rng);
  std::vector<VectorXd> out;
  out.reserve(data.g());
  for (std::size_t i = 0; i < data.g(); ++i) {
    const auto& c = data.cluster(i);
    out.push_back(c.X * model.params.beta + adjusted[i] * w[i]);
  }
  return out;
}

std::vector<VectorXd> wild_resample(const FittedModel& model, Hccme hccme, AuxDist aux, RandomStream& rng) {
  return wild_draw(model, wild_residuals(model, hccme), aux, rng);
}

// ---------------------------------------------------------------------------
// REB/2 post-processing
// ---------------------------------------------------------------------------

MatrixXd uncorrelate_varcomps(const MatrixXd& replicates) {
  const auto B = replicates.rows();
  const auto nu = replicates.cols();
  if (B <= nu) throw Error(ErrorCode::InsufficientReplicates, "need more replicates than variance components");
  if (!(replicates.array() > 0.0).all()) {
    throw Error(ErrorCode::NonPositiveVarianceComponent, "log requires strictly positive variance components");
  }
  const MatrixXd S = replicates.array().log().matrix();
  const Eigen::RowVectorXd mean = S.colwise().mean();
  const MatrixXd centered = S.rowwise() - mean;
  const MatrixXd C = centered.transpose() * centered / static_cast<double>(B - 1);
  const Eigen::RowVectorXd sd = C.diagonal().cwiseSqrt().transpose();

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
  const VectorXd& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 1e-14 * std::max(ev.maxCoeff(), 0.0)) || !(ev.minCoeff() > 0.0)) {
    throw Error(ErrorCode::SingularBootstrapCovariance, "bootstrap covariance of log variance components is singular");
  }
  const MatrixXd inv_sqrt = eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();

  MatrixXd L = centered * inv_sqrt;
  L = (L.array().rowwise() * sd.array()).matrix();
  L.rowwise() += mean;
  return L.array().exp().matrix();
}

BootstrapResult recenter_estimates(const BootstrapResult& result) {
  const auto p = result.replicates.cols();
  if (result.observed.classes.size() != static_cast<std::size_t>(p)) {
    config_error("recentering needs every statistic tagged as fixed effect or variance component");
  }
  BootstrapResult out = result;
  for (Eigen::Index j = 0; j < p; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (Eigen::Index b = 0; b < out.replicates.rows(); ++b) {
      if (out.missing[static_cast<std::size_t>(b)]) continue;
      sum += out.replicates(b, j);
      ++n;
    }
    if (n == 0) continue;
    const double avg = sum / static_cast<double>(n);
    const double observed = out.observed.values(j);
    const bool fixed = out.observed.classes[static_cast<std::size_t>(j)] == ColumnClass::FixedEffect;
    if (!fixed && avg == 0.0) {
      throw Error(ErrorCode::ZeroReplicateMean, "ratio correction undefined for '" + out.observed.names[static_cast<std::size_t>(j)] + "'");
    }
    for (Eigen::Index b = 0; b < out.replicates.rows(); ++b) {
      if (out.missing[static_cast<std::size_t>(b)]) continue;
      double& x = out.replicates(b, j);
      x = fixed ? observed + x - avg : x * (observed / avg);
    }
  }
  out.stats = compute_stats(out.observed, out.replicates, out.missing);
  return out;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

namespace {

// Quantities computed once from the original fit and shared by every replicate.
struct Setup {
  std::optional<ReflatedResiduals> reflated;
  std::optional<RebPools> reb_pools;
  std::vector<VectorXd> wild_adjusted;
};

Setup prepare(const FittedModel& model, const BootstrapConfig& config) {
  Setup s;
  switch (config.type()) {
    case BootstrapType::Residual:
      s.reflated = center_and_reflate(model_residuals(model), model);
      break;
    case BootstrapType::Reb: {
      // REB/2 resamples as REB/0 and post-processes the replicates.
      const RebVariant v = *config.reb_variant() == RebVariant::Reb1 ? RebVariant::Reb1 : RebVariant::Reb0;
      s.reb_pools = make_reb_pools(model, v);
      break;
    }
    case BootstrapType::Wild:
      s.wild_adjusted = wild_residuals(model, *config.hccme());
      break;
    default:
      break;
  }
  return s;
}

GroupedData generate(const FittedModel& model, const BootstrapConfig& config, const Setup& setup, RandomStream& rng) {
  const GroupedData& data = *model.data;
  switch (config.type()) {
    case BootstrapType::Case: return case_resample(data, *config.resample(), rng);
    case BootstrapType::Parametric: return data.with_responses(parametric_resample(model, rng));
    case BootstrapType::Residual: return data.with_responses(residual_resample(model, *setup.reflated, rng));
    case BootstrapType::Reb: return data.with_responses(reb_resample(model, *setup.reb_pools, rng));
    case BootstrapType::Wild:
      return data.with_responses(wild_draw(model, setup.wild_adjusted, *config.aux_dist(), rng));
  }
  config_error("unhandled bootstrap type");
}

NamedVector evaluate_observed(const FittedModel& model, const StatisticFn& f, const BootstrapConfig& config) {
  NamedVector observed = f(model);
  if (observed.names.size() != static_cast<std::size_t>(observed.values.size())) {
    config_error("statistic returned mismatched names and values");
  }
  if (config.type() == BootstrapType::Reb && config.reb_variant() == RebVariant::Reb2) {
    const bool tagged = observed.classes.size() == observed.names.size();
    const bool has_varcomp =
        std::find(observed.classes.begin(), observed.classes.end(), ColumnClass::VarianceComponent) !=
        observed.classes.end();
    if (!tagged || !has_varcomp) config_error("REB/2 requires the 'all' (fixed effects and variance components) statistic");
  }
  return observed;
}

// Whitening and recentering on the merged replicate matrix. Rows with a
// non-positive variance component cannot be log-transformed; they are
// excluded and logged rather than aborting the run.
BootstrapResult postprocess_reb2(BootstrapResult result) {
  std::vector<Eigen::Index> var_cols;
  for (std::size_t j = 0; j < result.observed.classes.size(); ++j) {
    if (result.observed.classes[j] == ColumnClass::VarianceComponent) var_cols.push_back(static_cast<Eigen::Index>(j));
  }
  for (Eigen::Index b = 0; b < result.replicates.rows(); ++b) {
    auto& miss = result.missing[static_cast<std::size_t>(b)];
    if (miss) continue;
    for (auto j : var_cols) {
      if (!(result.replicates(b, j) > 0.0)) {
        miss = 1;
        result.replicates.row(b).setConstant(kNaN);
        result.logs[static_cast<std::size_t>(b)].errors.push_back(
            "REB/2: non-positive variance component; replicate excluded from post-processing");
        break;
      }
    }
  }
  std::vector<Eigen::Index> ok_rows;
  for (Eigen::Index b = 0; b < result.replicates.rows(); ++b) {
    if (!result.missing[static_cast<std::size_t>(b)]) ok_rows.push_back(b);
  }
  MatrixXd vc(static_cast<Eigen::Index>(ok_rows.size()), static_cast<Eigen::Index>(var_cols.size()));
  for (std::size_t r = 0; r < ok_rows.size(); ++r) {
    for (std::size_t k = 0; k < var_cols.size(); ++k) {
      vc(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = result.replicates(ok_rows[r], var_cols[k]);
    }
  }
  const MatrixXd uncorrelated = uncorrelate_varcomps(vc);
  for (std::size_t r = 0; r < ok_rows.size(); ++r) {
    for (std::size_t k = 0; k < var_cols.size(); ++k) {
      result.replicates(ok_rows[r], var_cols[k]) =
          uncorrelated(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    }
  }
  return recenter_estimates(result);
}

BootstrapResult finish(BootstrapResult result, const BootstrapConfig& config) {
  if (config.type() == BootstrapType::Reb && config.reb_variant() == RebVariant::Reb2) {
    return postprocess_reb2(std::move(result));
  }
  result.stats = compute_stats(result.observed, result.replicates, result.missing);
  return result;
}

}  // namespace

BootstrapResult bootstrap_shard(std::shared_ptr<const FittedModel> model, const StatisticFn& f,
                                const BootstrapConfig& config, std::size_t shard, std::size_t n_shards) {
  if (n_shards == 0 || shard >= n_shards) config_error("invalid shard specification");
  BootstrapResult result;
  result.observed = evaluate_observed(*model, f, config);
  result.type = config.type();
  result.model = model;
  result.data = model->data;
  result.call = config.describe();

  const Setup setup = prepare(*model, config);
  const auto p = result.observed.values.size();
  const auto& names = result.observed.names;

  for (std::size_t b = shard; b < config.B(); b += n_shards) result.replicate_index.push_back(b);
  const auto rows = static_cast<Eigen::Index>(result.replicate_index.size());
  result.B = result.replicate_index.size();
  result.replicates = MatrixXd::Constant(rows, p, kNaN);
  result.missing.assign(result.B, 1);
  result.logs.resize(result.B);

  for (std::size_t k = 0; k < result.B; ++k) {
    const std::uint64_t seed = derive_seed(config.master_seed(), result.replicate_index[k]);
    result.seeds.push_back(seed);
    ReplicateLog& log = result.logs[k];
    RandomStream rng = make_stream(seed);
    try {
      auto refit_data = std::make_shared<const GroupedData>(generate(*model, config, setup, rng));
      const FittedModel refit = fit_reml(refit_data);
      if (refit.boundary) log.messages.push_back("boundary (singular) fit");
      if (!refit.converged) log.warnings.push_back("model failed to converge");
      const NamedVector stat = f(refit);
      if (stat.names != names || stat.values.size() != p) {
        throw Error(ErrorCode::DimensionMismatch, "statistic returned a different name sequence");
      }
      result.replicates.row(static_cast<Eigen::Index>(k)) = stat.values.transpose();
      result.missing[k] = 0;
    } catch (const std::exception& e) {
      log.errors.emplace_back(e.what());
    }
  }
  return result;
}

BootstrapResult merge_shards(std::vector<BootstrapResult> shards) {
  if (shards.empty()) config_error("no shards to merge");
  if (shards.size() == 1) return std::move(shards.front());

  std::vector<std::pair<std::size_t, std::size_t>> order;  // (shard, row)
  for (std::size_t s = 0; s < shards.size(); ++s) {
    for (std::size_t r = 0; r < shards[s].B; ++r) order.emplace_back(s, r);
  }
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    return shards[a.first].replicate_index[a.second] < shards[b.first].replicate_index[b.second];
  });

  BootstrapResult out;
  const BootstrapResult& head = shards.front();
  out.observed = head.observed;
  out.type = head.type;
  out.model = head.model;
  out.data = head.data;
  out.call = head.call;
  out.B = order.size();
  out.replicates.resize(static_cast<Eigen::Index>(out.B), head.replicates.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& [s, r] = order[k];
    const BootstrapResult& src = shards[s];
    out.replicates.row(static_cast<Eigen::Index>(k)) = src.replicates.row(static_cast<Eigen::Index>(r));
    out.missing.push_back(src.missing[r]);
    out.seeds.push_back(src.seeds[r]);
    out.replicate_index.push_back(src.replicate_index[r]);
    out.logs.push_back(src.logs[r]);
  }
  out.stats = compute_stats(out.observed, out.replicates, out.missing);
  return out;
}

BootstrapResult bootstrap(std::shared_ptr<const FittedModel> model, const StatisticFn& f,
                          const BootstrapConfig& config) {
  return finish(bootstrap_shard(std::move(model), f, config, 0, 1), config);
}

BootstrapResult bootstrap(const FittedModel& model, const StatisticFn& f, const BootstrapConfig& config) {
  return bootstrap(std::make_shared<const FittedModel>(model), f, config);
}

BootstrapResult bootstrap_parallel(std::shared_ptr<const FittedModel> model, const StatisticFn& f,
                                   const BootstrapConfig& config, std::size_t workers) {
  if (workers == 0) config_error("workers must be at least 1");
  const std::size_t n_shards = std::min(workers, config.B());
  if (n_shards == 1) return bootstrap(std::move(model), f, config);

  std::vector<BootstrapResult> shards(n_shards);
  std::vector<std::exception_ptr> failures(n_shards);
  std::vector<std::thread> threads;
  threads.reserve(n_shards);
  for (std::size_t s = 0; s < n_shards; ++s) {
    threads.emplace_back([&, s] {
      try {
        shards[s] = bootstrap_shard(model, f, config, s, n_shards);
      } catch (...) {
        failures[s] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return finish(merge_shards(std::move(shards)), config);
}

}  // namespace mixedboot
