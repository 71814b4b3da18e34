#include "fwerlim/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string_view>

#include "fwerlim/csv.hpp"
#include "fwerlim/errors.hpp"
#include "fwerlim/estimators.hpp"
#include "fwerlim/gaussian_model.hpp"
#include "fwerlim/limits.hpp"
#include "fwerlim/procedures.hpp"

namespace fwerlim::cli {
namespace {

constexpr double kDefaultAlpha = 0.05;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_token(std::string_view token, const std::string& path, std::size_t line) {
  T value{};
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw UsageError(path + ":" + std::to_string(line) + ": cannot parse '" +
                     std::string(token) + "'");
  }
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  return in;
}

template <typename T>
T single(const std::vector<T>& values, const char* flag, std::optional<T> fallback = {}) {
  if (values.empty()) {
    if (fallback) return *fallback;
    throw UsageError(std::string("missing ") + flag);
  }
  if (values.size() > 1) {
    throw UsageError(std::string(flag) + " takes a single value for this command");
  }
  return values.front();
}

template <typename T>
std::vector<T> grid_or(const std::vector<T>& values, T fallback) {
  return values.empty() ? std::vector<T>{fallback} : values;
}

std::optional<Direction> parse_direction(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name == "stepdown") return Direction::StepDown;
  if (name == "stepup") return Direction::StepUp;
  throw UsageError("unknown direction '" + name + "' (stepdown, stepup)");
}

CriticalValues read_cutoffs(const std::string& path) {
  return CriticalValues(read_value_file(path));
}

// Resolves a procedure name plus the optional --direction / --cutoffs flags.
Procedure make_procedure(const ExperimentConfig& cfg, const std::string& name, double alpha) {
  const auto direction = parse_direction(cfg.direction);
  if (name == "custom") {
    if (cfg.cutoffs_path.empty()) throw UsageError("procedure 'custom' needs --cutoffs FILE");
    return Procedure::custom(read_cutoffs(cfg.cutoffs_path),
                             direction.value_or(Direction::StepDown));
  }
  if (name == "hommel" || !direction) return Procedure::from_name(name, alpha);
  return Procedure::stepwise(parse_family(name), *direction, alpha);
}

// Prints validity findings for one procedure; returns false when violated.
bool report_validity(std::ostream& out, const Procedure& proc, std::size_t n, double alpha,
                     std::string_view prefix) {
  if (proc.kind() == Procedure::Kind::Hommel) {
    out << prefix << proc.name() << ": no cutoff vector to check\n";
    return true;
  }
  const auto violations = validate_fwer_cutoffs(proc.critical_values(n), alpha, proc.direction());
  const char* what = proc.direction() == Direction::StepDown ? "u_i <= alpha/(n-i+1)"
                                                             : "u_i <= i*alpha/n";
  if (violations.empty()) {
    out << prefix << proc.name() << ": valid (" << what << " holds for all i)\n";
    return true;
  }
  out << prefix << proc.name() << ": " << violations.size() << " violation(s) of " << what
      << '\n';
  for (const auto& v : violations) {
    out << prefix << "  i=" << v.index << " u_i=" << csv::format_double(v.value)
        << " bound=" << csv::format_double(v.bound) << '\n';
  }
  return false;
}

int run_cutoffs(const ExperimentConfig& cfg, std::ostream& out) {
  const double alpha = single(cfg.alpha, "--alpha", std::optional{kDefaultAlpha});
  const std::string family = single(cfg.procedures, "--family", std::optional<std::string>{});
  Procedure proc = make_procedure(cfg, family, alpha);
  std::size_t n = 0;
  if (family == "custom") {
    n = read_value_file(cfg.cutoffs_path).size();
    if (!cfg.n.empty() && single(cfg.n, "--n") != n) {
      throw UsageError("--n disagrees with the length of --cutoffs");
    }
  } else {
    n = single(cfg.n, "--n");
  }
  if (proc.kind() == Procedure::Kind::Hommel) {
    throw UsageError("Hommel's procedure has no critical-value table");
  }
  const auto u = proc.critical_values(n);
  out << "rank,cutoff\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    out << i + 1 << ',' << csv::format_double(u[i]) << '\n';
  }
  if (cfg.check_validity) report_validity(out, proc, n, alpha, "# ");
  return kSuccess;
}

int run_decide(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.pvalues_path.empty()) throw UsageError("decide needs --pvalues FILE");
  const double alpha = single(cfg.alpha, "--alpha", std::optional{kDefaultAlpha});
  const auto proc = make_procedure(cfg, single(cfg.procedures, "--proc",
                                               std::optional<std::string>{}),
                                   alpha);
  const PValueVector p(read_value_file(cfg.pvalues_path));
  if (cfg.check_validity) report_validity(out, proc, p.size(), alpha, "# ");
  const auto decision = proc.apply(p);
  if (decision.count == 0) {
    out << "no rejections\n";
    return kSuccess;
  }
  out << "rejected " << decision.count << " of " << p.size() << ':';
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (decision.rejected[i]) out << ' ' << i + 1;
  }
  out << '\n';
  return kSuccess;
}

// Writes to --output when given, otherwise to `out`.
template <typename Fn>
void with_output(const ExperimentConfig& cfg, std::ostream& out, Fn&& fn) {
  if (cfg.output.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(cfg.output, std::ios::binary);
  if (!file) throw UsageError("cannot write '" + cfg.output + "'");
  fn(file);
  file.flush();
  if (!file) throw UsageError("write to '" + cfg.output + "' failed");
}

HypothesisConfig build_hypotheses(const ExperimentConfig& cfg, double rho) {
  std::optional<std::size_t> n;
  if (!cfg.n.empty()) n = single(cfg.n, "--n");

  std::optional<CorrelationModel> model;
  if (!cfg.matrix_path.empty()) {
    if (!cfg.rho.empty()) throw UsageError("--rho and --matrix are mutually exclusive");
    auto m = read_matrix_file(cfg.matrix_path);
    if (n && *n != m.n) throw UsageError("--n disagrees with the matrix dimension");
    n = m.n;
    model = CorrelationModel::general(m.n, std::move(m.entries));
  } else {
    model = CorrelationModel::equicorrelated(rho);
  }

  if (!cfg.mu_path.empty()) {
    if (!cfg.n_false.empty() || !cfg.false_fraction.empty() || !cfg.mu.empty()) {
      throw UsageError("--mu-file excludes --n-false, --false-fraction and --mu");
    }
    auto mu = read_value_file(cfg.mu_path);
    if (n && *n != mu.size()) throw UsageError("--n disagrees with the length of --mu-file");
    return HypothesisConfig(std::move(mu), std::move(*model));
  }
  if (!n) throw UsageError("missing --n");
  if (!cfg.n_false.empty() && !cfg.false_fraction.empty()) {
    throw UsageError("--n-false and --false-fraction are mutually exclusive");
  }
  MeanSpec spec;
  if (!cfg.n_false.empty()) spec.n_false = single(cfg.n_false, "--n-false");
  if (!cfg.false_fraction.empty()) spec.false_fraction = single(cfg.false_fraction, "--false-fraction");
  spec.mu = single(cfg.mu, "--mu", std::optional{0.0});
  if (!spec.n_false && !spec.false_fraction) {
    if (spec.mu != 0.0) throw UsageError("--mu needs --n-false or --false-fraction");
    spec.n_false = 0;
  }
  return HypothesisConfig::with_false_nulls(*n, spec.resolve(*n), spec.mu, std::move(*model));
}

int run_estimate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.procedures.empty()) throw UsageError("estimate needs at least one --proc");
  const double alpha = single(cfg.alpha, "--alpha", std::optional{kDefaultAlpha});
  const double rho = cfg.rho.empty() ? 0.0 : single(cfg.rho, "--rho");
  const Metric metric = parse_metric(cfg.metric);
  const auto config = build_hypotheses(cfg, rho);

  std::vector<Procedure> procs;
  for (const auto& name : cfg.procedures) procs.push_back(make_procedure(cfg, name, alpha));
  if (cfg.check_validity) {
    for (const auto& p : procs) report_validity(err, p, config.n(), alpha, "");
  }
  const auto results = estimate_many(procs, config, metric, cfg.replicates, cfg.seed, cfg.threads);

  const double mu = config.max_mean();
  std::vector<SweepRow> rows;
  for (std::size_t j = 0; j < procs.size(); ++j) {
    SweepRow row;
    row.procedure = cfg.procedures[j];
    row.metric = metric;
    row.n = config.n();
    row.rho = config.model().min_off_diagonal();
    row.alpha = alpha;
    row.n_false = config.false_count();
    row.mu = mu;
    row.replicates = cfg.replicates;
    row.seed = cfg.seed;
    row.result = results[j];
    annotate_limits(row, procs[j], config);
    rows.push_back(std::move(row));
  }
  with_output(cfg, out, [&](std::ostream& os) { csv::write_rows(os, rows); });
  return kSuccess;
}

std::vector<MeanSpec> mean_grid(const ExperimentConfig& cfg) {
  if (!cfg.mu_path.empty() || !cfg.matrix_path.empty()) {
    throw UsageError("sweep runs on the equicorrelated model with constant means; use estimate "
                     "for --matrix or --mu-file");
  }
  if (!cfg.n_false.empty() && !cfg.false_fraction.empty()) {
    throw UsageError("--n-false and --false-fraction are mutually exclusive");
  }
  std::vector<MeanSpec> grid;
  if (cfg.n_false.empty() && cfg.false_fraction.empty()) {
    if (!cfg.mu.empty()) throw UsageError("--mu needs --n-false or --false-fraction");
    grid.push_back(MeanSpec::global_null());
    return grid;
  }
  if (cfg.mu.empty()) throw UsageError("false nulls need --mu");
  for (std::size_t k : cfg.n_false) {
    for (double mu : cfg.mu) grid.push_back(MeanSpec{k, std::nullopt, mu});
  }
  for (double f : cfg.false_fraction) {
    if (!(f >= 0.0 && f <= 1.0)) throw UsageError("--false-fraction must lie in [0, 1]");
    for (double mu : cfg.mu) grid.push_back(MeanSpec{std::nullopt, f, mu});
  }
  return grid;
}

int run_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.procedures.empty()) throw UsageError("sweep needs at least one --proc");
  if (!cfg.direction.empty() || !cfg.cutoffs_path.empty()) {
    throw UsageError("sweep takes named procedures only (no --direction or --cutoffs)");
  }
  if (cfg.n.empty()) throw UsageError("missing --n");
  SweepGrid grid;
  grid.n = cfg.n;
  grid.rho = grid_or(cfg.rho, 0.0);
  grid.alpha = grid_or(cfg.alpha, kDefaultAlpha);
  grid.means = mean_grid(cfg);
  const Metric metric = parse_metric(cfg.metric);
  for (const auto& name : cfg.procedures) Procedure::from_name(name, grid.alpha.front());

  if (cfg.check_validity) {
    for (std::size_t n : grid.n) {
      for (double a : grid.alpha) {
        for (const auto& name : cfg.procedures) {
          std::ostringstream prefix;
          prefix << "n=" << n << " alpha=" << csv::format_double(a) << " ";
          report_validity(err, Procedure::from_name(name, a), n, a, prefix.str());
        }
      }
    }
  }

  const auto rows = sweep(cfg.procedures, metric, grid, cfg.replicates, cfg.seed, cfg.threads);
  with_output(cfg, out, [&](std::ostream& os) { csv::write_rows(os, rows); });

  std::size_t failed = 0;
  for (const auto& row : rows) {
    if (!row.error.empty()) {
      ++failed;
      err << "error: " << row.procedure << " n=" << row.n << " rho=" << csv::format_double(row.rho)
          << " alpha=" << csv::format_double(row.alpha) << ": " << row.error << '\n';
    }
  }
  return failed == 0 ? kSuccess : kModelError;
}

int run_limit(const ExperimentConfig& cfg, std::ostream& out) {
  const double alpha = single(cfg.alpha, "--alpha", std::optional{kDefaultAlpha});
  const double rho = single(cfg.rho, "--rho");
  LimitOptions options;
  options.grid_points = cfg.grid_points;
  options.tolerance = cfg.tolerance;
  const auto r = limiting_bh_fdr(alpha, rho, options);
  out << "value: " << csv::format_double(r.value) << '\n';
  out << "minimizer_t: " << (r.minimizer_t ? csv::format_double(*r.minimizer_t) : "n/a") << '\n';
  out << "objective_at_minimizer: "
      << (r.minimizer_t ? csv::format_double(r.objective_at_minimizer) : "n/a") << '\n';
  out << "grid_points: " << r.grid_points << '\n';
  out << "refinement_tolerance: " << csv::format_double(r.refinement_tolerance) << '\n';
  return kSuccess;
}

}  // namespace

std::vector<double> read_value_file(const std::string& path) {
  auto in = open_input(path);
  std::vector<double> values;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto token = trim(line);
    if (token.empty()) continue;
    values.push_back(parse_token<double>(token, path, lineno));
  }
  if (in.bad()) throw UsageError("error while reading '" + path + "'");
  if (values.empty()) throw UsageError("'" + path + "' holds no values");
  return values;
}

MatrixFile read_matrix_file(const std::string& path) {
  auto in = open_input(path);
  MatrixFile m;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto content = trim(line);
    if (content.empty()) continue;
    if (!have_header) {
      m.n = parse_token<std::size_t>(content, path, lineno);
      if (m.n == 0) throw UsageError(path + ": matrix dimension must be positive");
      m.entries.reserve(m.n * m.n);
      have_header = true;
      continue;
    }
    if (rows == m.n) throw UsageError(path + ":" + std::to_string(lineno) + ": extra row");
    std::size_t columns = 0;
    std::string_view rest = content;
    while (!rest.empty()) {
      const auto end = rest.find_first_of(" \t");
      m.entries.push_back(parse_token<double>(rest.substr(0, end), path, lineno));
      ++columns;
      rest = end == std::string_view::npos ? std::string_view{} : trim(rest.substr(end));
    }
    if (columns != m.n) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(m.n) + " entries, found " + std::to_string(columns));
    }
    ++rows;
  }
  if (!have_header) throw UsageError("'" + path + "' is empty");
  if (rows != m.n) {
    throw UsageError(path + ": expected " + std::to_string(m.n) + " rows, found " +
                     std::to_string(rows));
  }
  return m;
}

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::Cutoffs: return run_cutoffs(config, out);
      case Command::Decide: return run_decide(config, out);
      case Command::Estimate: return run_estimate(config, out, err);
      case Command::Sweep: return run_sweep(config, out, err);
      case Command::Limit: return run_limit(config, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return kModelError;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << '\n';
    return kModelError;
  }
  return kUsageError;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stepwise multiple-testing procedures under equicorrelated Gaussian models",
               "fwerlim"};
  app.set_config("--config", "", "TOML file with option values (flags take precedence)");
  app.require_subcommand(1);
  app.set_version_flag("--version", "fwerlim 0.1.0");

  ExperimentConfig cfg;
  cfg.replicates = kDefaultReplicates;

  const auto add_level = [&](CLI::App* sub) {
    sub->add_option("--alpha", cfg.alpha, "Level alpha (or q for bl1..bl3); default 0.05")
        ->delimiter(',');
  };
  const auto add_direction = [&](CLI::App* sub) {
    sub->add_option("--direction", cfg.direction, "stepdown or stepup (default: the family's)");
  };
  const auto add_validity = [&](CLI::App* sub) {
    sub->add_flag("--check-validity", cfg.check_validity,
                  "Check the cutoffs against the level-alpha necessary condition");
  };
  const auto add_model = [&](CLI::App* sub) {
    sub->add_option("--rho", cfg.rho, "Equicorrelation rho in [0, 1) (default 0)")->delimiter(',');
    sub->add_option("--n-false", cfg.n_false, "Number of false nulls")->delimiter(',');
    sub->add_option("--false-fraction", cfg.false_fraction, "Fraction of false nulls")
        ->delimiter(',');
    sub->add_option("--mu", cfg.mu, "Mean of each false null")->delimiter(',');
    sub->add_option("--metric", cfg.metric, "fwer, fdr, anypwr or rejectany");
    sub->add_option("--replicates", cfg.replicates, "Monte Carlo replicates");
    sub->add_option("--seed", cfg.seed, "Base seed");
    sub->add_option("--threads", cfg.threads, "Worker threads (0: $FWERLIM_THREADS or all cores)");
    sub->add_option("--output,-o", cfg.output, "CSV output path (default stdout)");
  };

  auto* cutoffs = app.add_subcommand("cutoffs", "Print a critical-value table");
  cutoffs->add_option("--family", cfg.procedures,
                      "bonferroni, sidak, holm, bl1, bl2, bl3, hochberg, bh or custom")
      ->required()
      ->expected(1);
  cutoffs->add_option("--n", cfg.n, "Number of hypotheses")->expected(1);
  cutoffs->add_option("--cutoffs,--values", cfg.cutoffs_path, "Cutoff file for family custom");
  add_level(cutoffs);
  add_direction(cutoffs);
  add_validity(cutoffs);

  auto* decide = app.add_subcommand("decide", "Apply a procedure to a p-value file");
  decide->add_option("--proc", cfg.procedures, "Procedure name, or custom")->required()->expected(1);
  decide->add_option("--pvalues", cfg.pvalues_path, "One p-value per line")->required();
  decide->add_option("--cutoffs", cfg.cutoffs_path, "Cutoff file for procedure custom");
  add_level(decide);
  add_direction(decide);
  add_validity(decide);

  auto* estimate = app.add_subcommand("estimate", "Monte Carlo estimate for one configuration");
  estimate->add_option("--proc", cfg.procedures, "Procedure names (repeatable, comma-separated)")
      ->required()
      ->delimiter(',');
  estimate->add_option("--n", cfg.n, "Number of hypotheses")->expected(1);
  estimate->add_option("--matrix", cfg.matrix_path, "Correlation matrix file instead of --rho");
  estimate->add_option("--mu-file", cfg.mu_path, "Explicit mean vector, one value per line");
  estimate->add_option("--cutoffs", cfg.cutoffs_path, "Cutoff file for procedure custom");
  add_level(estimate);
  add_direction(estimate);
  add_validity(estimate);
  add_model(estimate);

  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo estimates over a parameter grid");
  sweep_cmd->add_option("--proc", cfg.procedures, "Procedure names (repeatable, comma-separated)")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--n", cfg.n, "Grid of n")->required()->delimiter(',');
  add_level(sweep_cmd);
  add_validity(sweep_cmd);
  add_model(sweep_cmd);

  auto* limit = app.add_subcommand("limit", "Limiting BH FDR under the global null");
  limit->add_option("--rho", cfg.rho, "Equicorrelation rho in [0, 1]")->required()->expected(1);
  limit->add_option("--grid-points", cfg.grid_points, "Mesh size before refinement");
  limit->add_option("--tolerance", cfg.tolerance, "Final bracket width in t");
  add_level(limit);

  for (auto* sub : {cutoffs, decide, estimate, sweep_cmd, limit}) sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  if (cutoffs->parsed()) cfg.command = Command::Cutoffs;
  else if (decide->parsed()) cfg.command = Command::Decide;
  else if (estimate->parsed()) cfg.command = Command::Estimate;
  else if (sweep_cmd->parsed()) cfg.command = Command::Sweep;
  else cfg.command = Command::Limit;
  return run(cfg, out, err);
}

}  // namespace fwerlim::cli
