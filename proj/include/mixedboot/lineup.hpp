#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixedboot/fitter.hpp"

namespace mixedboot {

struct LineupRow {
  std::size_t sample = 0;  // panel, 1..n_panels
  std::string cluster_id;
  std::size_t row_index = 0;
  double y = 0.0;
  double resid = 0.0;       // conditional
  double fitted = 0.0;      // conditional fitted values
  double mar_resid = 0.0;
  double mar_fitted = 0.0;
};

struct LineupBundle {
  std::vector<LineupRow> rows;
  std::size_t answer = 0;  // panel holding the observed residuals
  std::string token;
};

/// n_panels - 1 parametric-bootstrap refits supply the decoy residuals; the
/// observed residuals go to a uniformly drawn panel. Deterministic in seed.
LineupBundle make_lineup(const FittedModel& model, std::size_t n_panels, std::uint64_t seed);

/// Position masked with a seed-derived key, as 8 hex digits.
std::string encode_position(std::size_t position, std::uint64_t seed);
/// Inverse of encode_position; throws InvalidConfig on malformed tokens.
std::size_t reveal_position(const std::string& token, std::uint64_t seed);

void write_lineup_csv(std::ostream& out, const LineupBundle& bundle);

}  // namespace mixedboot
