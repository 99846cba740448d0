#include "mixedboot/inference.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "mixedboot/error.hpp"

namespace mixedboot {

std::string to_string(IntervalType type) {
  switch (type) {
    case IntervalType::Norm: return "norm";
    case IntervalType::Basic: return "basic";
    case IntervalType::Perc: return "perc";
  }
  return "unknown";
}

IntervalType parse_interval_type(const std::string& text) {
  for (auto t : {IntervalType::Norm, IntervalType::Basic, IntervalType::Perc}) {
    if (to_string(t) == text) return t;
  }
  throw Error(ErrorCode::UnknownIntervalType, "unknown interval type '" + text + "'");
}

// ---------------------------------------------------------------------------
// Builtin statistics
// ---------------------------------------------------------------------------

NamedVector fixed_effects(const FittedModel& model) {
  NamedVector out;
  out.names = model.data->fixed_names();
  out.values = model.params.beta;
  return out;
}

NamedVector variance_component_values(const FittedModel& model) {
  const VarianceComponents vc = variance_components(model);
  NamedVector out;
  out.values.resize(static_cast<Eigen::Index>(vc.nu));
  for (std::size_t k = 0; k < vc.nu; ++k) {
    out.names.push_back(vc.entries[k].first);
    out.values(static_cast<Eigen::Index>(k)) = vc.entries[k].second;
  }
  return out;
}

NamedVector extract_parameters(const FittedModel& model) {
  const NamedVector fe = fixed_effects(model);
  const NamedVector vc = variance_component_values(model);
  NamedVector out;
  out.names = fe.names;
  out.names.insert(out.names.end(), vc.names.begin(), vc.names.end());
  out.values.resize(fe.values.size() + vc.values.size());
  out.values << fe.values, vc.values;
  out.classes.assign(fe.names.size(), ColumnClass::FixedEffect);
  out.classes.insert(out.classes.end(), vc.names.size(), ColumnClass::VarianceComponent);
  return out;
}

NamedVector icc(const FittedModel& model) {
  if (model.params.D.rows() != 1) {
    throw Error(ErrorCode::NotRandomInterceptModel, "icc needs a single random intercept");
  }
  const double tau = model.params.D(0, 0);
  NamedVector out;
  out.names = {"icc"};
  out.values = VectorXd::Constant(1, tau / (tau + model.params.sigma2));
  return out;
}

StatisticFn builtin_statistic(const std::string& name) {
  if (name == "fixef") return fixed_effects;
  if (name == "varcomp") return variance_component_values;
  if (name == "all") return extract_parameters;
  if (name == "icc") return icc;
  throw Error(ErrorCode::InvalidConfig, "unknown statistic '" + name + "'");
}

// ---------------------------------------------------------------------------
// Summaries and intervals
// ---------------------------------------------------------------------------

std::vector<StatSummary> summarize(const BootstrapResult& result) {
  if (result.n_ok() < 2) {
    throw Error(ErrorCode::InsufficientReplicates,
                "need at least 2 populated replicates, have " + std::to_string(result.n_ok()));
  }
  return compute_stats(result.observed, result.replicates, result.missing);
}

double bootstrap_quantile(const std::vector<double>& sorted, double prob) {
  const double n = static_cast<double>(sorted.size());
  const double pos = std::clamp((n + 1.0) * prob, 1.0, n);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo >= sorted.size() || frac == 0.0) return sorted[lo - 1];
  return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

IntervalTable confint(const BootstrapResult& result, const std::set<IntervalType>& types, double level) {
  if (!(level > 0.5 && level < 1.0)) throw Error(ErrorCode::InvalidConfig, "level must lie in (0.5, 1)");
  const std::size_t n_ok = result.n_ok();
  const bool needs_quantiles = types.count(IntervalType::Basic) > 0 || types.count(IntervalType::Perc) > 0;
  if (n_ok < 2 || (needs_quantiles && n_ok < 20)) {
    throw Error(ErrorCode::InsufficientReplicates,
                "too few populated replicates for the requested intervals: " + std::to_string(n_ok));
  }
  const auto stats = summarize(result);
  const double alpha = 1.0 - level;
  const double z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  const MatrixXd ok = result.ok_replicates();

  std::vector<std::pair<double, double>> quantiles(stats.size());
  if (needs_quantiles) {
    for (std::size_t j = 0; j < stats.size(); ++j) {
      const auto col = ok.col(static_cast<Eigen::Index>(j));
      std::vector<double> sorted(col.begin(), col.end());
      std::sort(sorted.begin(), sorted.end());
      quantiles[j] = {bootstrap_quantile(sorted, alpha / 2.0), bootstrap_quantile(sorted, 1.0 - alpha / 2.0)};
    }
  }

  IntervalTable table;
  for (auto type : {IntervalType::Norm, IntervalType::Basic, IntervalType::Perc}) {
    if (types.count(type) == 0) continue;
    for (std::size_t j = 0; j < stats.size(); ++j) {
      const auto& s = stats[j];
      IntervalRow row;
      row.term = s.term;
      row.estimate = s.observed;
      row.type = type;
      row.level = level;
      switch (type) {
        case IntervalType::Norm:
          row.lower = (s.observed - s.bias) - z * s.se;
          row.upper = (s.observed - s.bias) + z * s.se;
          break;
        case IntervalType::Basic:
          row.lower = 2.0 * s.observed - quantiles[j].second;
          row.upper = 2.0 * s.observed - quantiles[j].first;
          break;
        case IntervalType::Perc:
          row.lower = quantiles[j].first;
          row.upper = quantiles[j].second;
          break;
      }
      table.push_back(std::move(row));
    }
  }
  return table;
}

BootstrapResult combine(const std::vector<BootstrapResult>& results) {
  if (results.size() < 2) throw Error(ErrorCode::IncompatibleResults, "combine needs at least two results");
  const BootstrapResult& head = results.front();
  for (const auto& r : results) {
    if (r.type != head.type) throw Error(ErrorCode::IncompatibleResults, "bootstrap types differ");
    if (r.observed.names != head.observed.names) throw Error(ErrorCode::IncompatibleResults, "statistic names differ");
    if (r.observed.values != head.observed.values) {
      throw Error(ErrorCode::IncompatibleResults, "observed statistics differ");
    }
    if (r.model && head.model && r.model != head.model && r.model->params.beta != head.model->params.beta) {
      throw Error(ErrorCode::IncompatibleResults, "results come from different models");
    }
  }
  BootstrapResult out;
  out.observed = head.observed;
  out.type = head.type;
  out.model = head.model;
  out.data = head.data;
  out.call = head.call;
  Eigen::Index rows = 0;
  for (const auto& r : results) rows += r.replicates.rows();
  out.replicates.resize(rows, head.replicates.cols());
  Eigen::Index at = 0;
  for (const auto& r : results) {
    out.replicates.middleRows(at, r.replicates.rows()) = r.replicates;
    at += r.replicates.rows();
    out.missing.insert(out.missing.end(), r.missing.begin(), r.missing.end());
    out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
    out.replicate_index.insert(out.replicate_index.end(), r.replicate_index.begin(), r.replicate_index.end());
    out.logs.insert(out.logs.end(), r.logs.begin(), r.logs.end());
    out.B += r.B;
  }
  out.stats = compute_stats(out.observed, out.replicates, out.missing);
  return out;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.7g", v);
  return buf;
}

std::string most_common(const std::vector<ReplicateLog>& logs, std::vector<std::string> ReplicateLog::*member) {
  std::map<std::string, std::size_t> counts;
  for (const auto& log : logs) {
    for (const auto& text : log.*member) ++counts[text];
  }
  if (counts.empty()) return "NULL";
  auto best = std::max_element(counts.begin(), counts.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; });
  return best->first;
}

}  // namespace

std::string format_summary(const BootstrapResult& result) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"", "term", "observed", "rep.mean", "se", "bias"});
  for (std::size_t j = 0; j < result.stats.size(); ++j) {
    const auto& s = result.stats[j];
    cells.push_back({std::to_string(j + 1), s.term, format_number(s.observed), format_number(s.rep_mean),
                     format_number(s.se), format_number(s.bias)});
  }
  std::vector<std::size_t> width(6, 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }

  std::ostringstream os;
  os << "Bootstrap type: " << to_string(result.type) << " \n\n";
  os << "Number of resamples: " << result.B << " \n\n";
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) os << ' ';
      os << std::string(width[c] - row[c].size(), ' ') << row[c];
    }
    os << '\n';
  }
  std::size_t n_messages = 0, n_warnings = 0, n_errors = 0;
  for (const auto& log : result.logs) {
    n_messages += log.messages.size();
    n_warnings += log.warnings.size();
    n_errors += log.errors.size();
  }
  os << "\nThere were " << n_messages << " messages, " << n_warnings << " warnings, and " << n_errors
     << " errors.\n\n";
  os << "The most commonly occurring message was: " << most_common(result.logs, &ReplicateLog::messages) << "\n\n";
  os << "The most commonly occurring warning was: " << most_common(result.logs, &ReplicateLog::warnings) << "\n\n";
  os << "The most commonly occurring error was: " << most_common(result.logs, &ReplicateLog::errors) << "\n";
  return os.str();
}

}  // namespace mixedboot
