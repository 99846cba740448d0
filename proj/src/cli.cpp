#include "mixedboot/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mixedboot/error.hpp"
#include "mixedboot/formula.hpp"
#include "mixedboot/inference.hpp"
#include "mixedboot/lineup.hpp"
#include "mixedboot/report.hpp"

namespace mixedboot::cli {

namespace {

namespace fs = std::filesystem;

struct Invocation {
  std::string data_path;
  std::string formula;
  std::string type;
  std::size_t B = 1000;
  std::string resample;
  int reb_variant = -1;
  std::string hccme;
  std::string aux_dist;
  std::string statistic = "all";
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  double level = 0.95;
  std::string ci_types = "norm,basic,perc";
  std::string out_dir;
  std::string from_dir;
  std::string reveal;
  std::size_t panels = 20;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool parse_bool(const std::string& text) {
  const std::string t = lower(text);
  if (t == "true" || t == "t" || t == "1") return true;
  if (t == "false" || t == "f" || t == "0") return false;
  throw Error(ErrorCode::InvalidConfig, "cannot read '" + text + "' as a boolean");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::shared_ptr<const FittedModel> fit_from(const Invocation& inv, std::ostream& err) {
  if (inv.data_path.empty()) throw Error(ErrorCode::InvalidConfig, "--data is required");
  if (inv.formula.empty()) throw Error(ErrorCode::InvalidConfig, "--formula is required");
  const DataTable table = read_csv(inv.data_path);
  const ModelSpec spec = parse_formula(inv.formula);
  auto data = std::make_shared<const GroupedData>(build_design(table, spec));
  auto model = std::make_shared<const FittedModel>(fit_reml(data));
  if (!model->converged) err << "warning: REML fit did not converge; using best point found\n";
  return model;
}

BootstrapConfig config_from(const Invocation& inv) {
  if (inv.type.empty()) throw Error(ErrorCode::InvalidConfig, "--type is required");
  const BootstrapType type = parse_bootstrap_type(inv.type);

  std::optional<CaseFlags> flags;
  if (!inv.resample.empty()) {
    const auto parts = split_list(inv.resample);
    if (parts.size() != 2) throw Error(ErrorCode::InvalidConfig, "--resample takes two booleans, e.g. false,true");
    flags = CaseFlags{parse_bool(parts[0]), parse_bool(parts[1])};
  }
  std::optional<RebVariant> reb;
  if (inv.reb_variant >= 0) {
    if (inv.reb_variant > 2) throw Error(ErrorCode::InvalidConfig, "--reb-variant must be 0, 1, or 2");
    reb = static_cast<RebVariant>(inv.reb_variant);
  }
  std::optional<Hccme> hccme;
  if (!inv.hccme.empty()) {
    const std::string h = lower(inv.hccme);
    if (h != "hc2" && h != "hc3") throw Error(ErrorCode::InvalidConfig, "--hccme must be hc2 or hc3");
    hccme = h == "hc2" ? Hccme::HC2 : Hccme::HC3;
  }
  std::optional<AuxDist> aux;
  if (!inv.aux_dist.empty()) {
    const std::string a = lower(inv.aux_dist);
    if (a != "f1" && a != "f2") throw Error(ErrorCode::InvalidConfig, "--aux-dist must be f1 or f2");
    aux = a == "f1" ? AuxDist::F1 : AuxDist::F2;
  }
  return BootstrapConfig(type, inv.B, inv.seed, flags, reb, hccme, aux);
}

BootstrapResult run_inline(const Invocation& inv, std::ostream& err) {
  const auto model = fit_from(inv, err);
  const BootstrapConfig config = config_from(inv);
  return bootstrap_parallel(model, builtin_statistic(inv.statistic), config, inv.workers);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return f;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
  return f;
}

int cmd_fit(const Invocation& inv, std::ostream& out, std::ostream& err) {
  const auto model = fit_from(inv, err);
  const auto j = model_to_json(*model);
  out << j.dump(2) << '\n';
  if (!inv.out_dir.empty()) {
    ensure_dir(inv.out_dir);
    open_out(fs::path(inv.out_dir) / "fit.json") << j.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_bootstrap(const Invocation& inv, std::ostream& out, std::ostream& err) {
  const BootstrapResult result = run_inline(inv, err);
  out << format_summary(result);
  if (!inv.out_dir.empty()) {
    ensure_dir(inv.out_dir);
    const fs::path dir(inv.out_dir);
    open_out(dir / "stats.json") << stats_to_json(result).dump(2) << '\n';
    auto rep = open_out(dir / "replicates.csv");
    write_replicates_csv(rep, result);
    open_out(dir / "logs.json") << logs_to_json(result).dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_ci(const Invocation& inv, std::ostream& out, std::ostream& err) {
  std::set<IntervalType> types;
  for (const auto& t : split_list(inv.ci_types)) types.insert(parse_interval_type(t));
  if (types.empty()) throw Error(ErrorCode::UnknownIntervalType, "--ci-types is empty");

  BootstrapResult result;
  if (!inv.data_path.empty()) {
    result = run_inline(inv, err);
  } else {
    const std::string from = inv.from_dir.empty() ? inv.out_dir : inv.from_dir;
    if (from.empty()) throw Error(ErrorCode::InvalidConfig, "ci needs --data or a directory via --from/--out");
    auto stats_in = open_in(fs::path(from) / "stats.json");
    nlohmann::json stats;
    try {
      stats = nlohmann::json::parse(stats_in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Io, std::string("malformed stats.json: ") + e.what());
    }
    auto rep_in = open_in(fs::path(from) / "replicates.csv");
    result = result_from_files(stats, read_replicates_csv(rep_in));
  }
  const IntervalTable table = confint(result, types, inv.level);
  write_intervals_csv(out, table);
  if (!inv.out_dir.empty()) {
    ensure_dir(inv.out_dir);
    auto csv = open_out(fs::path(inv.out_dir) / "intervals.csv");
    write_intervals_csv(csv, table);
    open_out(fs::path(inv.out_dir) / "intervals.json") << intervals_to_json(table).dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_lineup(const Invocation& inv, std::ostream& out, std::ostream& err) {
  if (!inv.reveal.empty()) {
    out << "True panel: " << reveal_position(inv.reveal, inv.seed) << '\n';
    return kExitOk;
  }
  const auto model = fit_from(inv, err);
  const LineupBundle bundle = make_lineup(*model, inv.panels, inv.seed);
  if (!inv.out_dir.empty()) {
    ensure_dir(inv.out_dir);
    auto csv = open_out(fs::path(inv.out_dir) / "lineup.csv");
    write_lineup_csv(csv, bundle);
    open_out(fs::path(inv.out_dir) / "answer.txt") << bundle.answer << '\n';
  } else {
    write_lineup_csv(out, bundle);
  }
  out << "Lineup key: " << bundle.token << "  (decode with: lineup --reveal " << bundle.token << " --seed "
      << inv.seed << ")\n";
  return kExitOk;
}

std::size_t default_workers() {
  if (const char* env = std::getenv("MIXEDBOOT_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Invocation inv;
  inv.workers = default_workers();

  CLI::App app{"Bootstrap inference for two-level linear mixed-effects models"};
  app.require_subcommand(1);

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--data", inv.data_path, "CSV data file");
    sub->add_option("--formula", inv.formula, "model formula, e.g. 'y ~ x + (1 | g)'");
  };
  auto add_boot = [&](CLI::App* sub) {
    sub->add_option("--type", inv.type, "case, parametric, residual, reb, or wild");
    sub->add_option("--B", inv.B, "number of resamples")->check(CLI::PositiveNumber);
    sub->add_option("--resample", inv.resample, "case bootstrap levels: ROWS,CLUSTERS booleans");
    sub->add_option("--reb-variant", inv.reb_variant, "REB variant 0, 1, or 2");
    sub->add_option("--hccme", inv.hccme, "hc2 or hc3");
    sub->add_option("--aux-dist", inv.aux_dist, "f1 or f2");
    sub->add_option("--statistic", inv.statistic, "fixef, varcomp, all, or icc")
        ->check(CLI::IsMember({"fixef", "varcomp", "all", "icc"}));
    sub->add_option("--workers", inv.workers, "parallel workers (default $MIXEDBOOT_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
  };

  auto* fit = app.add_subcommand("fit", "fit the model by REML and print estimates");
  add_model(fit);
  fit->add_option("--out", inv.out_dir, "output directory");

  auto* boot = app.add_subcommand("bootstrap", "run a bootstrap and write stats/replicates/logs");
  add_model(boot);
  add_boot(boot);
  boot->add_option("--seed", inv.seed, "master seed");
  boot->add_option("--out", inv.out_dir, "output directory");

  auto* ci = app.add_subcommand("ci", "confidence intervals from a prior run or inline");
  add_model(ci);
  add_boot(ci);
  ci->add_option("--seed", inv.seed, "master seed");
  ci->add_option("--level", inv.level, "confidence level");
  ci->add_option("--ci-types", inv.ci_types, "comma list of norm, basic, perc");
  ci->add_option("--from", inv.from_dir, "directory with stats.json and replicates.csv");
  ci->add_option("--out", inv.out_dir, "output directory (also the input directory when --from is absent)");

  auto* lineup = app.add_subcommand("lineup", "residual lineup with parametric-bootstrap decoys");
  add_model(lineup);
  lineup->add_option("--seed", inv.seed, "seed for decoys and panel position");
  lineup->add_option("--panels", inv.panels, "number of panels")->check(CLI::Range(2, 1000));
  lineup->add_option("--out", inv.out_dir, "output directory");
  lineup->add_option("--reveal", inv.reveal, "decode a lineup key (with the same --seed)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(inv, out, err);
    if (boot->parsed()) return cmd_bootstrap(inv, out, err);
    if (ci->parsed()) return cmd_ci(inv, out, err);
    if (lineup->parsed()) return cmd_lineup(inv, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Io ? kExitIo : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace mixedboot::cli
