#include "mixedboot/report.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "mixedboot/error.hpp"

namespace mixedboot {

using nlohmann::json;

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string format_exact(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_replicates_csv(std::ostream& out, const BootstrapResult& result) {
  const auto& names = result.observed.names;
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << csv_field(names[j]);
  out << '\n';
  for (Eigen::Index b = 0; b < result.replicates.rows(); ++b) {
    const bool missing = result.missing[static_cast<std::size_t>(b)] != 0;
    for (Eigen::Index j = 0; j < result.replicates.cols(); ++j) {
      if (j) out << ',';
      if (!missing) out << format_exact(result.replicates(b, j));
    }
    out << '\n';
  }
}

ReplicateTable read_replicates_csv(std::istream& in) {
  ReplicateTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "replicates file is empty");
  table.names = split_fields(line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && table.names.size() > 1) continue;
    auto fields = split_fields(line);
    if (fields.size() != table.names.size()) throw Error(ErrorCode::Io, "replicates row has the wrong field count");
    bool missing = true;
    std::vector<double> row(fields.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (fields[j].empty()) continue;
      missing = false;
      const char* begin = fields[j].data();
      const char* end = begin + fields[j].size();
      auto [ptr, ec] = std::from_chars(begin, end, row[j]);
      if (ec != std::errc() || ptr != end) throw Error(ErrorCode::Io, "unparseable replicate value '" + fields[j] + "'");
    }
    table.missing.push_back(missing ? 1 : 0);
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.names.size()));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    for (std::size_t j = 0; j < rows[b].size(); ++j) {
      table.values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = rows[b][j];
    }
  }
  return table;
}

json stats_to_json(const BootstrapResult& result) {
  json j;
  j["type"] = to_string(result.type);
  j["B"] = result.B;
  j["B_ok"] = result.n_ok();
  j["call"] = result.call;
  j["names"] = result.observed.names;
  json observed = json::array();
  for (Eigen::Index k = 0; k < result.observed.values.size(); ++k) observed.push_back(result.observed.values(k));
  j["observed"] = observed;
  json classes = json::array();
  for (auto c : result.observed.classes) classes.push_back(c == ColumnClass::FixedEffect ? "fixed" : "variance");
  j["classes"] = classes;
  json stats = json::array();
  for (const auto& s : result.stats) {
    stats.push_back({{"term", s.term},
                     {"observed", number_or_null(s.observed)},
                     {"rep_mean", number_or_null(s.rep_mean)},
                     {"se", number_or_null(s.se)},
                     {"bias", number_or_null(s.bias)}});
  }
  j["stats"] = stats;
  j["seeds"] = result.seeds;
  j["replicate_index"] = result.replicate_index;
  std::size_t messages = 0, warnings = 0, errors = 0;
  for (const auto& log : result.logs) {
    messages += log.messages.size();
    warnings += log.warnings.size();
    errors += log.errors.size();
  }
  j["counts"] = {{"messages", messages}, {"warnings", warnings}, {"errors", errors}};
  return j;
}

json logs_to_json(const BootstrapResult& result) {
  json arr = json::array();
  for (std::size_t k = 0; k < result.logs.size(); ++k) {
    const std::size_t replicate = k < result.replicate_index.size() ? result.replicate_index[k] + 1 : k + 1;
    const auto& log = result.logs[k];
    for (const auto& t : log.messages) arr.push_back({{"replicate", replicate}, {"kind", "message"}, {"text", t}});
    for (const auto& t : log.warnings) arr.push_back({{"replicate", replicate}, {"kind", "warning"}, {"text", t}});
    for (const auto& t : log.errors) arr.push_back({{"replicate", replicate}, {"kind", "error"}, {"text", t}});
  }
  return arr;
}

json model_to_json(const FittedModel& model) {
  const auto& data = *model.data;
  json j;
  json fixed = json::array();
  for (std::size_t k = 0; k < data.p(); ++k) {
    fixed.push_back({{"term", data.fixed_names()[k]},
                     {"estimate", model.params.beta(static_cast<Eigen::Index>(k))},
                     {"std_error", std::sqrt(model.fixed_cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)))}});
  }
  j["fixed_effects"] = fixed;
  json vc = json::array();
  for (const auto& [label, value] : variance_components(model).entries) vc.push_back({{"term", label}, {"estimate", value}});
  j["variance_components"] = vc;
  j["reml_criterion"] = model.reml_criterion;
  j["converged"] = model.converged;
  j["boundary"] = model.boundary;
  j["iterations"] = model.n_iterations;
  j["n_obs"] = data.n_total();
  j["n_groups"] = data.g();
  return j;
}

BootstrapResult result_from_files(const json& stats, const ReplicateTable& table) {
  BootstrapResult r;
  r.type = parse_bootstrap_type(stats.at("type").get<std::string>());
  r.call = stats.value("call", std::string{});
  r.observed.names = stats.at("names").get<std::vector<std::string>>();
  const auto& obs = stats.at("observed");
  r.observed.values.resize(static_cast<Eigen::Index>(obs.size()));
  for (std::size_t k = 0; k < obs.size(); ++k) r.observed.values(static_cast<Eigen::Index>(k)) = number_from(obs[k]);
  for (const auto& c : stats.value("classes", json::array())) {
    r.observed.classes.push_back(c.get<std::string>() == "fixed" ? ColumnClass::FixedEffect : ColumnClass::VarianceComponent);
  }
  if (table.names != r.observed.names) throw Error(ErrorCode::IncompatibleResults, "replicates header does not match stats.json");
  r.replicates = table.values;
  r.missing = table.missing;
  r.B = static_cast<std::size_t>(table.values.rows());
  r.seeds = stats.value("seeds", std::vector<std::uint64_t>{});
  r.replicate_index = stats.value("replicate_index", std::vector<std::size_t>{});
  r.logs.resize(r.B);
  r.stats = compute_stats(r.observed, r.replicates, r.missing);
  return r;
}

void write_intervals_csv(std::ostream& out, const IntervalTable& table) {
  out << "term,estimate,lower,upper,type,level\n";
  for (const auto& row : table) {
    out << csv_field(row.term) << ',' << format_exact(row.estimate) << ',' << format_exact(row.lower) << ','
        << format_exact(row.upper) << ',' << to_string(row.type) << ',' << format_exact(row.level) << '\n';
  }
}

json intervals_to_json(const IntervalTable& table) {
  json arr = json::array();
  for (const auto& row : table) {
    arr.push_back({{"term", row.term},
                   {"estimate", row.estimate},
                   {"lower", row.lower},
                   {"upper", row.upper},
                   {"type", to_string(row.type)},
                   {"level", row.level}});
  }
  return arr;
}

}  // namespace mixedboot
