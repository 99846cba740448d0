#include "mixedboot/lineup.hpp"

#include <cstdio>
#include <ostream>

#include "mixedboot/error.hpp"
#include "mixedboot/report.hpp"
#include "mixedboot/resamplers.hpp"
#include "mixedboot/residuals.hpp"

namespace mixedboot {

namespace {

constexpr std::uint64_t kPositionStream = 0xffffffffffffffffULL;
constexpr std::uint64_t kKeyStream = 0xfffffffffffffffeULL;

std::uint32_t position_key(std::uint64_t seed) {
  return static_cast<std::uint32_t>(derive_seed(seed, kKeyStream) >> 32);
}

void append_panel(std::vector<LineupRow>& rows, std::size_t sample, const FittedModel& fit) {
  const ResidualSet res = model_residuals(fit);
  const auto& data = *fit.data;
  for (std::size_t i = 0; i < data.g(); ++i) {
    const auto& c = data.cluster(i);
    for (Eigen::Index r = 0; r < c.y.size(); ++r) {
      LineupRow row;
      row.sample = sample;
      row.cluster_id = c.cluster_id;
      row.row_index = c.source_rows[static_cast<std::size_t>(r)];
      row.y = c.y(r);
      row.resid = res.conditional[i](r);
      row.fitted = c.y(r) - row.resid;
      row.mar_resid = res.marginal[i](r);
      row.mar_fitted = c.y(r) - row.mar_resid;
      rows.push_back(row);
    }
  }
}

}  // namespace

std::string encode_position(std::size_t position, std::uint64_t seed) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(static_cast<std::uint32_t>(position) ^ position_key(seed)));
  return buf;
}

std::size_t reveal_position(const std::string& token, std::uint64_t seed) {
  if (token.size() != 8 || token.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "lineup token must be 8 hex digits");
  }
  const auto masked = static_cast<std::uint32_t>(std::stoul(token, nullptr, 16));
  return static_cast<std::size_t>(masked ^ position_key(seed));
}

LineupBundle make_lineup(const FittedModel& model, std::size_t n_panels, std::uint64_t seed) {
  if (n_panels < 2) throw Error(ErrorCode::InvalidConfig, "a lineup needs at least 2 panels");
  RandomStream pick = make_stream(derive_seed(seed, kPositionStream));
  LineupBundle bundle;
  bundle.answer = uniform_index(pick, n_panels) + 1;
  bundle.token = encode_position(bundle.answer, seed);

  std::size_t decoy = 0;
  for (std::size_t panel = 1; panel <= n_panels; ++panel) {
    if (panel == bundle.answer) {
      append_panel(bundle.rows, panel, model);
      continue;
    }
    RandomStream rng = make_stream(derive_seed(seed, decoy++));
    auto data = std::make_shared<const GroupedData>(model.data->with_responses(parametric_resample(model, rng)));
    append_panel(bundle.rows, panel, fit_reml(data));
  }
  return bundle;
}

void write_lineup_csv(std::ostream& out, const LineupBundle& bundle) {
  out << ".sample,cluster_id,row_index,y,.resid,.fitted,.mar.resid,.mar.fitted\n";
  for (const auto& r : bundle.rows) {
    out << r.sample << ',' << r.cluster_id << ',' << r.row_index << ',' << format_exact(r.y) << ','
        << format_exact(r.resid) << ',' << format_exact(r.fitted) << ',' << format_exact(r.mar_resid) << ','
        << format_exact(r.mar_fitted) << '\n';
  }
}

}  // namespace mixedboot
