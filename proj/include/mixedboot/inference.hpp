#pragma once

#include <set>
#include <string>
#include <vector>

#include "mixedboot/resamplers.hpp"

namespace mixedboot {

enum class IntervalType { Norm, Basic, Perc };

std::string to_string(IntervalType type);
IntervalType parse_interval_type(const std::string& text);

struct IntervalRow {
  std::string term;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  IntervalType type = IntervalType::Norm;
  double level = 0.95;
};

using IntervalTable = std::vector<IntervalRow>;

// ---------------------------------------------------------------------------
// Builtin statistics
// ---------------------------------------------------------------------------

/// Fixed effects followed by the variance components, tagged by class.
NamedVector extract_parameters(const FittedModel& model);
NamedVector fixed_effects(const FittedModel& model);
NamedVector variance_component_values(const FittedModel& model);
/// D_11 / (D_11 + sigma2) for random-intercept-only models.
NamedVector icc(const FittedModel& model);

/// One of "fixef", "varcomp", "all", "icc".
StatisticFn builtin_statistic(const std::string& name);

// ---------------------------------------------------------------------------
// Summaries and intervals
// ---------------------------------------------------------------------------

/// Throws InsufficientReplicates when fewer than two replicates are populated.
std::vector<StatSummary> summarize(const BootstrapResult& result);

/// Empirical quantile: linear interpolation between order statistics at
/// position (n + 1) * prob, clamped to [1, n]. `sorted` must be ascending.
double bootstrap_quantile(const std::vector<double>& sorted, double prob);

/// Rows are grouped by type in the order norm, basic, perc, and by statistic
/// within each type. Quantile-based types need at least 20 populated rows.
IntervalTable confint(const BootstrapResult& result,
                      const std::set<IntervalType>& types = {IntervalType::Norm, IntervalType::Basic,
                                                             IntervalType::Perc},
                      double level = 0.95);

/// Concatenates replicate matrices in argument order. All inputs must share
/// type, statistic names, and observed values.
BootstrapResult combine(const std::vector<BootstrapResult>& results);

/// Printed layout: type, resample count, stats table, log counts.
std::string format_summary(const BootstrapResult& result);

}  // namespace mixedboot
