// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mixedboot/cli.hpp"
#include "mixedboot/error.hpp"
#include "mixedboot/inference.hpp"
#include "mixedboot/resamplers.hpp"
#include "mixedboot/residuals.hpp"
#include "test_support.hpp"

using namespace mixedboot;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

int failures = 0;
std::vector<int> selected;  // empty: run all

void criterion(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
  if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += fmt("; over time budget %.0f s", budget_s);
  }
  if (!o.pass) ++failures;
  std::printf("%s  [%2d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

Outcome fitter_oracle() {
  double worst_var = 0.0, worst_beta = 0.0;
  int boundary = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GroupedData d = testing::balanced_oneway(6, 4, 2.0, 1.0, 10.0, 1000 + seed);
    const auto a = testing::anova_oracle(d);
    const FittedModel fit = fit_reml(d);
    worst_beta = std::max(worst_beta, std::abs(fit.params.beta(0) - a.grand_mean));
    worst_var = std::max(worst_var, testing::rel_diff(fit.params.sigma2, a.sigma2));
    if (a.sigma_b2 > 0.0) {
      worst_var = std::max(worst_var, testing::rel_diff(fit.params.D(0, 0), a.sigma_b2));
    } else {
      ++boundary;
      if (fit.params.D(0, 0) != 0.0) worst_var = std::max(worst_var, 1.0);
    }
  }
  return {worst_var <= 1e-5 && worst_beta <= 1e-8,
          fmt("max rel err in variances %.2e, max |beta - grand mean| %.2e", worst_var, worst_beta) +
              ", boundary datasets " + std::to_string(boundary)};
}

Outcome reflation_exactness() {
  double worst_d = 0.0, worst_s = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    testing::SimSpec s;
    s.seed = 500 + seed;
    s.g = 10 + seed % 15;
    s.n = 3 + seed % 6;
    s.beta = (VectorXd(2) << 1.0, -1.0).finished();
    s.D = seed % 2 ? MatrixXd::Constant(1, 1, 1.0) : (MatrixXd(2, 2) << 1.5, 0.4, 0.4, 0.8).finished();
    const FittedModel fit = fit_reml(testing::simulate_dataset(s));
    const ReflatedResiduals out = center_and_reflate(model_residuals(fit), fit);
    const double g = static_cast<double>(fit.data->g());
    worst_d = std::max(worst_d, (out.ranef_star.transpose() * out.ranef_star / g - fit.params.D).cwiseAbs().maxCoeff());
    double ss = 0.0, n = 0.0;
    for (const auto& e : out.cond_star) {
      ss += e.squaredNorm();
      n += static_cast<double>(e.size());
    }
    worst_s = std::max(worst_s, testing::rel_diff(ss / n, fit.params.sigma2));
  }
  return {worst_d <= 1e-8 && worst_s <= 1e-8,
          fmt("max |U*'U*/g - D| %.2e, max rel err of mean-square errors %.2e", worst_d, worst_s)};
}

Outcome reb2_postprocessing() {
  RandomStream rng = make_stream(90);
  MatrixXd v(2000, 2);
  const double rho = 0.9;
  for (Eigen::Index b = 0; b < v.rows(); ++b) {
    const double z1 = standard_normal(rng), z2 = standard_normal(rng);
    v(b, 0) = std::exp(0.5 + 0.3 * z1);
    v(b, 1) = std::exp(-1.0 + 0.7 * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2));
  }
  const MatrixXd logs = uncorrelate_varcomps(v).array().log().matrix();
  const MatrixXd c = logs.rowwise() - logs.colwise().mean();
  const MatrixXd cov = c.transpose() * c;
  const double corr = std::abs(cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1)));

  testing::SimSpec s;
  s.g = 25;
  s.n = 6;
  s.seed = 91;
  const auto model = std::make_shared<const FittedModel>(fit_reml(testing::simulate_dataset(s)));
  const BootstrapResult r = bootstrap(model, builtin_statistic("all"), BootstrapConfig::reb(300, RebVariant::Reb2, 5));
  const MatrixXd ok = r.ok_replicates();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < ok.cols(); ++j) {
    const double obs = r.observed.values(j);
    const bool fixed = r.observed.classes[static_cast<std::size_t>(j)] == ColumnClass::FixedEffect;
    const double err = fixed ? std::abs(ok.col(j).mean() - obs) : testing::rel_diff(ok.col(j).mean(), obs);
    worst = std::max(worst, err);
  }
  return {corr <= 1e-8 && worst <= 1e-12,
          fmt("log-scale correlation after whitening %.2e, max recentering error %.2e", corr, worst)};
}

Outcome auxiliary_moments() {
  const double p_low = (std::sqrt(5.0) + 1.0) / (2.0 * std::sqrt(5.0));
  bool pass = true;
  std::string detail;
  for (auto [dist, name] : {std::pair{AuxDist::F1, "F1"}, std::pair{AuxDist::F2, "F2"}}) {
    RandomStream rng = make_stream(dist == AuxDist::F1 ? 41 : 42);
    const int n = 1000000;
    double sum = 0.0, sq = 0.0;
    int low = 0;
    for (int k = 0; k < n; ++k) {
      const double w = draw_auxiliary(dist, rng);
      sum += w;
      sq += w * w;
      if (std::abs(w + 0.6180339887) < 1e-6) ++low;
    }
    const double mean = sum / n, var = sq / n - mean * mean;
    pass = pass && std::abs(mean) <= 0.005 && std::abs(var - 1.0) <= 0.01;
    detail += std::string(name) + fmt(" mean %.4f var %.4f", mean, var);
    if (dist == AuxDist::F1) {
      const double mass = static_cast<double>(low) / n;
      pass = pass && std::abs(mass - p_low) <= 0.002;
      detail += fmt(" mass at -0.618 %.4f; ", mass);
    }
  }
  return {pass, detail};
}

Outcome parametric_sanity() {
  testing::SimSpec s;
  s.g = 50;
  s.n = 10;
  s.seed = 55;
  s.beta = (VectorXd(2) << 3.0, 1.5).finished();
  s.D = MatrixXd::Constant(1, 1, 2.0);
  s.sigma2 = 1.5;
  const auto model = std::make_shared<const FittedModel>(fit_reml(testing::simulate_dataset(s)));
  const BootstrapResult r = bootstrap(model, builtin_statistic("fixef"), BootstrapConfig::parametric(2000, 17));
  bool pass = r.n_ok() == 2000;
  std::string detail;
  for (std::size_t j = 0; j < r.stats.size(); ++j) {
    const auto& st = r.stats[j];
    const double model_se = std::sqrt(model->fixed_cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    const double shift = std::abs(st.rep_mean - st.observed) / (st.se / std::sqrt(2000.0));
    const double ratio = st.se / model_se;
    pass = pass && shift <= 4.0 && std::abs(ratio - 1.0) <= 0.15;
    detail += st.term + fmt(" |bias|/(se/sqrt B) %.2f, se ratio %.3f; ", shift, ratio);
  }
  return {pass, detail};
}

Outcome coverage() {
  const int reps = 200;
  int covered = 0, usable = 0;
  for (int k = 0; k < reps; ++k) {
    testing::SimSpec s;
    s.g = 30;
    s.n = 5;
    s.seed = 60000 + static_cast<std::uint64_t>(k);
    s.beta = (VectorXd(2) << 2.0, 1.0).finished();
    s.D = MatrixXd::Constant(1, 1, 1.0);
    s.sigma2 = 1.0;
    const auto model = std::make_shared<const FittedModel>(fit_reml(testing::simulate_dataset(s)));
    const BootstrapResult r =
        bootstrap(model, builtin_statistic("fixef"), BootstrapConfig::residual(500, 7000 + static_cast<std::uint64_t>(k)));
    if (r.n_ok() < 20) continue;
    ++usable;
    const IntervalTable t = confint(r, {IntervalType::Perc}, 0.95);
    const auto& slope = t[1];
    if (slope.lower <= 1.0 && 1.0 <= slope.upper) ++covered;
  }
  const double rate = static_cast<double>(covered) / reps;
  return {usable == reps && rate >= 0.88 && rate <= 0.99,
          fmt("slope covered in %.0f of %.0f datasets (%.3f)", covered, reps, rate)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism_and_merge() {
  const fs::path dir = fs::temp_directory_path() / "mixedboot_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path csv = dir / "data.csv";
  {
    RandomStream rng = make_stream(71);
    std::ofstream f(csv);
    f.precision(17);
    f << "grp,y,x\n";
    for (int g = 1; g <= 20; ++g) {
      const double u = standard_normal(rng);
      for (int k = 0; k < 6; ++k) {
        const double x = standard_normal(rng);
        f << "s" << g << ',' << 1.0 + 0.5 * x + u + standard_normal(rng) << ',' << x << '\n';
      }
    }
  }
  std::ostringstream sink, err;
  auto run = [&](const std::string& workers, const std::string& out) {
    return cli::run({"bootstrap", "--data", csv.string(), "--formula", "y ~ x + (1 | grp)", "--type", "residual", "--B",
                     "400", "--seed", "42", "--workers", workers, "--out", (dir / out).string()},
                    sink, err);
  };
  const bool ran = run("1", "w1") == cli::kExitOk && run("4", "w4") == cli::kExitOk;
  const std::string a = slurp(dir / "w1" / "replicates.csv"), b = slurp(dir / "w4" / "replicates.csv");
  const bool identical = ran && !a.empty() && a == b;

  testing::SimSpec s;
  s.g = 20;
  s.seed = 72;
  const auto model = std::make_shared<const FittedModel>(fit_reml(testing::simulate_dataset(s)));
  const auto f = builtin_statistic("fixef");
  const BootstrapResult r1 = bootstrap_parallel(model, f, BootstrapConfig::parametric(1000, 1), 2);
  const BootstrapResult r2 = bootstrap_parallel(model, f, BootstrapConfig::parametric(1000, 2), 2);
  const BootstrapResult both = combine({r1, r2});
  fs::remove_all(dir);
  return {identical && both.B == 2000,
          std::string("replicates.csv ") + (identical ? "identical" : "DIFFERENT") + " for 1 vs 4 workers; combined B = " +
              std::to_string(both.B)};
}

Outcome icc_anchor() {
  const GroupedData d = testing::balanced_oneway(4, 3, 1.0, 1.0, 0.0, 1);
  const FittedModel m = testing::hand_model(d, VectorXd::Zero(1), MatrixXd::Constant(1, 1, 1.173 * 1.173), 1.798 * 1.798);
  const double v = icc(m).values(0);
  return {std::abs(v - 0.2985) <= 1e-4, fmt("icc %.7f", v)};
}

Outcome interval_algebra() {
  BootstrapResult r;
  r.observed.names = {"t"};
  r.observed.values = VectorXd::Constant(1, 50.0);
  r.replicates.resize(99, 1);
  for (int k = 0; k < 99; ++k) r.replicates(k, 0) = k + 1;
  r.missing.assign(99, 0);
  r.B = 99;
  r.logs.resize(99);
  r.stats = compute_stats(r.observed, r.replicates, r.missing);
  const IntervalTable t = confint(r);
  const auto pick = [&](IntervalType type) {
    return *std::find_if(t.begin(), t.end(), [&](const IntervalRow& row) { return row.type == type; });
  };
  const auto perc = pick(IntervalType::Perc), basic = pick(IntervalType::Basic), norm = pick(IntervalType::Norm);
  const double e1 = std::max(std::abs(perc.lower - 2.5), std::abs(perc.upper - 97.5));
  const double e2 = std::max(std::abs(basic.lower - (100.0 - perc.upper)), std::abs(basic.upper - (100.0 - perc.lower)));
  const double e3 = std::abs((norm.upper - norm.lower) - 2.0 * 1.959964 * r.stats[0].se);
  // 1.959964 is the quantile rounded to 6 decimals; the width uses the exact value.
  const double e3_exact = std::abs((norm.upper - norm.lower) - 2.0 * 1.959963984540054 * r.stats[0].se);
  return {e1 <= 1e-9 && e2 <= 1e-9 && e3_exact <= 1e-9 && e3 <= 2.0 * 1e-6 * r.stats[0].se,
          fmt("perc (%.6f, %.6f)", perc.lower, perc.upper) + fmt(", basic reflection err %.1e, norm width err %.1e", e2, e3_exact)};
}

Outcome case_schemes() {
  std::vector<ClusterBlock> cs;
  for (int i = 0; i < 4; ++i) {
    ClusterBlock c;
    c.cluster_id = std::to_string(i);
    const Eigen::Index n = i + 1;
    c.y = VectorXd::LinSpaced(n, i, i + 1.0);
    c.X = MatrixXd::Ones(n, 1);
    c.Z = MatrixXd::Ones(n, 1);
    cs.push_back(c);
  }
  const GroupedData d(cs, {"(Intercept)"}, {"(Intercept)"});
  bool g_ok = true, sizes_ok = true;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    RandomStream r1 = make_stream(seed), r2 = make_stream(seed);
    g_ok = g_ok && case_resample(d, {false, true}, r1).g() == d.g();
    const GroupedData rows = case_resample(d, {true, false}, r2);
    for (std::size_t i = 0; i < d.g(); ++i) sizes_ok = sizes_ok && rows.cluster(i).size() == d.cluster(i).size();
  }
  bool rejected = false;
  try {
    BootstrapConfig::cases(10, {false, false}, 1);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::InvalidConfig;
  }
  return {g_ok && sizes_ok && rejected, std::string("clusters-only keeps g: ") + (g_ok ? "yes" : "no") +
                                            ", rows-only keeps sizes: " + (sizes_ok ? "yes" : "no") +
                                            ", neither level rejected: " + (rejected ? "yes" : "no")};
}

}  // namespace

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  for (int k = 1; k < argc; ++k) selected.push_back(std::atoi(argv[k]));
  criterion(1, "REML matches the balanced one-way ANOVA estimators", 5, fitter_oracle);
  criterion(2, "reflated residuals reproduce D and sigma2", 10, reflation_exactness);
  criterion(3, "REB/2 whitening and recentering", 5, reb2_postprocessing);
  criterion(4, "wild auxiliary distributions", 5, auxiliary_moments);
  criterion(5, "parametric bootstrap of fixed effects", 120, parametric_sanity);
  criterion(6, "residual bootstrap percentile coverage of the slope", 900, coverage);
  criterion(7, "worker-count determinism and combine", 120, determinism_and_merge);
  criterion(8, "intraclass correlation anchor", 1, icc_anchor);
  criterion(9, "interval algebra on the 99-replicate toy", 1, interval_algebra);
  criterion(10, "case resampling schemes", 1, case_schemes);
  std::printf("%d criteria failed\n", failures);
  return failures;
}
