#pragma once

#include <iosfwd>
#include <json.hpp>
#include <string>

#include "mixedboot/inference.hpp"

namespace mixedboot {

/// Header = statistic names; one line per replicate; missing rows are empty
/// fields. Values use round-trip precision.
void write_replicates_csv(std::ostream& out, const BootstrapResult& result);

struct ReplicateTable {
  std::vector<std::string> names;
  MatrixXd values;
  std::vector<char> missing;
};
ReplicateTable read_replicates_csv(std::istream& in);

nlohmann::json stats_to_json(const BootstrapResult& result);
/// JSON array of {replicate, kind, text}.
nlohmann::json logs_to_json(const BootstrapResult& result);
nlohmann::json model_to_json(const FittedModel& model);

/// Rebuilds a result (without model or data references) from stats.json and
/// the replicate table written next to it.
BootstrapResult result_from_files(const nlohmann::json& stats, const ReplicateTable& table);

void write_intervals_csv(std::ostream& out, const IntervalTable& table);
nlohmann::json intervals_to_json(const IntervalTable& table);

/// Shortest text that parses back to the same double.
std::string format_exact(double v);

}  // namespace mixedboot
