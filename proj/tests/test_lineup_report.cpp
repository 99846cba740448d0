#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mixedboot/error.hpp"
#include "mixedboot/inference.hpp"
#include "mixedboot/lineup.hpp"
#include "mixedboot/report.hpp"
#include "mixedboot/residuals.hpp"
#include "test_support.hpp"

using namespace mixedboot;

namespace {

std::map<std::size_t, std::vector<LineupRow>> by_panel(const LineupBundle& b) {
  std::map<std::size_t, std::vector<LineupRow>> out;
  for (const auto& r : b.rows) out[r.sample].push_back(r);
  return out;
}

}  // namespace

TEST_CASE("lineup has one true panel among refitted decoys") {
  const FittedModel fit = fit_reml(testing::balanced_oneway(10, 4, 1.0, 1.0, 3.0, 6));
  const LineupBundle bundle = make_lineup(fit, 20, 99);
  const auto panels = by_panel(bundle);
  REQUIRE(panels.size() == 20);
  CHECK(panels.begin()->first == 1);
  CHECK(panels.rbegin()->first == 20);

  const ResidualSet truth = model_residuals(fit);
  VectorXd truth_flat(static_cast<Eigen::Index>(fit.data->n_total()));
  Eigen::Index at = 0;
  for (const auto& e : truth.conditional) {
    truth_flat.segment(at, e.size()) = e;
    at += e.size();
  }

  int matches = 0;
  for (const auto& [panel, rows] : panels) {
    REQUIRE(rows.size() == fit.data->n_total());
    double max_diff = 0.0, sum = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      max_diff = std::max(max_diff, std::abs(rows[k].resid - truth_flat(static_cast<Eigen::Index>(k))));
      sum += rows[k].resid;
      CHECK(std::abs(rows[k].resid + rows[k].fitted - rows[k].y) <= 1e-9);
    }
    if (max_diff <= 1e-12) {
      ++matches;
      CHECK(panel == bundle.answer);
    } else {
      CHECK(std::abs(sum) <= 1e-8);
    }
  }
  CHECK(matches == 1);
}

TEST_CASE("lineup is deterministic and the key round-trips") {
  const FittedModel fit = fit_reml(testing::balanced_oneway(6, 3, 1.0, 1.0, 0.0, 2));
  const LineupBundle a = make_lineup(fit, 5, 1234);
  const LineupBundle b = make_lineup(fit, 5, 1234);
  CHECK(a.answer == b.answer);
  CHECK(a.token == b.token);
  std::ostringstream sa, sb;
  write_lineup_csv(sa, a);
  write_lineup_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind(".sample,cluster_id,row_index,y,.resid,.fitted,.mar.resid,.mar.fitted\n", 0) == 0);
  CHECK(reveal_position(a.token, 1234) == a.answer);
  CHECK(a.token.size() == 8);

  std::set<std::size_t> positions;
  for (std::uint64_t s = 0; s < 200; ++s) {
    positions.insert(reveal_position(encode_position(7, s), s));
  }
  CHECK(positions == std::set<std::size_t>{7});
  CHECK_THROWS_AS(reveal_position("12345", 1), Error);
  CHECK_THROWS_AS(make_lineup(fit, 1, 1), Error);
}

TEST_CASE("replicate CSV round trip keeps exact values and missing rows") {
  BootstrapResult r;
  r.observed.names = {"a", "b,c"};
  r.observed.values = (VectorXd(2) << 0.1, 1.0 / 3.0).finished();
  r.replicates.resize(3, 2);
  r.replicates << 0.1 + 0.2, -1e-300, std::nan(""), std::nan(""), 12345.678901234567, 2.0 / 3.0;
  r.missing = {0, 1, 0};
  std::stringstream io;
  write_replicates_csv(io, r);
  const ReplicateTable t = read_replicates_csv(io);
  CHECK(t.names == r.observed.names);
  CHECK(t.missing == r.missing);
  CHECK(t.values(0, 0) == 0.1 + 0.2);
  CHECK(t.values(0, 1) == -1e-300);
  CHECK(t.values(2, 1) == 2.0 / 3.0);
}

TEST_CASE("stats JSON round trip reproduces intervals") {
  testing::SimSpec s;
  s.g = 12;
  const auto model = std::make_shared<const FittedModel>(fit_reml(testing::simulate_dataset(s)));
  const BootstrapResult r = bootstrap(model, builtin_statistic("all"), BootstrapConfig::parametric(25, 8));
  std::stringstream rep;
  write_replicates_csv(rep, r);
  const auto stats = nlohmann::json::parse(stats_to_json(r).dump());
  const BootstrapResult back = result_from_files(stats, read_replicates_csv(rep));
  CHECK(back.B == r.B);
  CHECK(back.type == r.type);
  CHECK(back.observed.values == r.observed.values);
  std::ostringstream x, y;
  write_intervals_csv(x, confint(r));
  write_intervals_csv(y, confint(back));
  CHECK(x.str() == y.str());
}

TEST_CASE("logs JSON lists each entry with its replicate number") {
  BootstrapResult r;
  r.logs.resize(3);
  r.replicate_index = {0, 1, 2};
  r.logs[1].messages.push_back("boundary (singular) fit");
  r.logs[2].errors.push_back("boom");
  const auto j = logs_to_json(r);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["replicate"] == 2);
  CHECK(j[0]["kind"] == "message");
  CHECK(j[1]["kind"] == "error");
}
