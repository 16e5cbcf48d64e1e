// orthoboot: Bayesian-bootstrap replication harness.
//
//   orthoboot run --config exp.json [--seed S] [--replicates R] [--bootstrap B] ...
//   orthoboot sweep --q-grid 5,20 --n-grid 250,500
//   orthoboot diagnose --score aipw
//   orthoboot export-dgp --dgp plm --n 1000 --out data.csv
//
// Output files default to $ORTHOBOOT_OUTPUT_DIR when --out is a bare file name.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orthoboot/dgp.hpp"
#include "orthoboot/diagnostics.hpp"
#include "orthoboot/error.hpp"
#include "orthoboot/harness.hpp"

namespace {

using namespace orthoboot;

constexpr int kExitUsage = 2;

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::invalid_argument: return 3;
    case ErrorCategory::config: return 4;
    case ErrorCategory::io: return 5;
    case ErrorCategory::degenerate: return 6;
    case ErrorCategory::convergence: return 7;
    case ErrorCategory::internal: return 8;
  }
  return 1;
}

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> bootstrap;
  std::optional<std::size_t> n;
  std::optional<std::size_t> q;
  std::optional<std::size_t> threads;
  std::string out;
  std::string format = "text";
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "Master seed");
  cmd->add_option("--replicates", flags.replicates, "Number of replicate analyses R");
  cmd->add_option("--bootstrap", flags.bootstrap, "Bootstrap draws B per replicate");
  cmd->add_option("--n", flags.n, "Sample size");
  cmd->add_option("--q", flags.q, "Covariate dimension (plm design)");
  cmd->add_option("--threads", flags.threads, "Replicate worker threads (0 = all cores)");
  cmd->add_option("--out", flags.out, "Output file (default: stdout)");
  cmd->add_option("--format", flags.format, "text | csv | json")
      ->check(CLI::IsMember({"text", "text-table", "csv", "delimited", "json", "structured"}));
}

void apply(const CommonFlags& flags, ExperimentConfig& cfg) {
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.replicates) cfg.replicates = *flags.replicates;
  if (flags.bootstrap) cfg.bootstrap = *flags.bootstrap;
  if (flags.n) cfg.n = *flags.n;
  if (flags.q) cfg.q = *flags.q;
  if (flags.threads) cfg.threads = *flags.threads;
  if (!flags.out.empty()) cfg.output_path = flags.out;
}

std::filesystem::path resolve_output(const std::string& name) {
  std::filesystem::path path(name);
  if (path.has_parent_path() || path.is_absolute()) return path;
  if (const char* dir = std::getenv("ORTHOBOOT_OUTPUT_DIR"); dir && *dir) {
    std::filesystem::create_directories(dir);
    return std::filesystem::path(dir) / path;
  }
  return path;
}

// Writes to the resolved output path, or stdout when none was given.
void deliver(const std::string& target, const std::string& text) {
  if (target.empty()) {
    std::cout << text;
    return;
  }
  const auto path = resolve_output(target);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
  std::cerr << "wrote " << path.string() << '\n';
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      grid.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw ConfigError("bad grid entry '" + item + "'");
    }
  }
  if (grid.empty()) throw ConfigError("empty grid");
  return grid;
}

Perturbation default_perturbation(ScoreKind score) {
  Perturbation p;
  if (score == ScoreKind::aipw) {
    p.mu1 = [](std::span<const double> x) { return 0.5 + 0.3 * x[0]; };
    p.mu0 = [](std::span<const double> x) { return -0.4 * std::cos(x[1]); };
    p.e = [](std::span<const double> x) { return 0.15 * std::tanh(x[2]); };
  } else {
    p.k_y = [](std::span<const double> x) { return 0.3 + 0.5 * std::sin(x[0]); };
    p.e = [](std::span<const double> x) { return 0.1 * std::tanh(x[1]); };
  }
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian bootstrap for Neyman-orthogonal moment conditions"};
  app.require_subcommand(1);

  // run
  CommonFlags run_flags;
  std::string config_path;
  std::string draws_dir;
  auto* run = app.add_subcommand("run", "Run one replicated experiment");
  run->add_option("--config", config_path, "Experiment config (JSON)");
  run->add_option("--draws-dir", draws_dir, "Write each replicate's posterior draws here");
  add_common(run, run_flags);

  // sweep
  CommonFlags sweep_flags;
  std::string sweep_config;
  std::string q_grid = "5,6,8,10,20";
  std::string n_grid = "250,500,1000,2000";
  auto* sweep = app.add_subcommand("sweep", "Covariate-dimension x sample-size sweep");
  sweep->add_option("--config", sweep_config, "Base experiment config (JSON)");
  sweep->add_option("--q-grid", q_grid, "Comma-separated q values");
  sweep->add_option("--n-grid", n_grid, "Comma-separated n values");
  add_common(sweep, sweep_flags);

  // diagnose
  std::string diag_score = "partialled_out";
  std::string evaluator = "analytic";
  std::size_t samples = 1'000'000;
  std::uint64_t diag_seed = 7;
  double tol = 1e-6;
  std::string diag_out;
  std::string curve_out;
  std::string rate_grid = "250,1000,4000,16000,64000";
  auto* diagnose = app.add_subcommand("diagnose", "Neyman-orthogonality checks along a Gateaux path");
  diagnose->add_option("--score", diag_score, "partialled_out | aipw | naive");
  diagnose->add_option("--evaluator", evaluator, "analytic | monte_carlo")
      ->check(CLI::IsMember({"analytic", "monte_carlo"}));
  diagnose->add_option("--samples", samples, "Covariate sample / Monte Carlo size");
  diagnose->add_option("--seed", diag_seed, "Seed");
  diagnose->add_option("--tol", tol, "Tolerance on |f'(0)|");
  diagnose->add_option("--rate-grid", rate_grid, "Sample sizes for the rate functional");
  diagnose->add_option("--out", diag_out, "Summary output (default: stdout)");
  diagnose->add_option("--curve", curve_out, "Write (t, f, stderr) curve as CSV");

  // export-dgp
  std::string dgp_name = "plm";
  std::size_t export_n = 1000;
  std::size_t export_q = 5;
  std::uint64_t export_seed = 1;
  std::string export_out;
  auto* export_dgp = app.add_subcommand("export-dgp", "Simulate a dataset and write it as CSV");
  export_dgp->add_option("--dgp", dgp_name, "plm | kernel_model");
  export_dgp->add_option("--n", export_n, "Sample size");
  export_dgp->add_option("--q", export_q, "Covariate dimension (plm)");
  export_dgp->add_option("--seed", export_seed, "Seed");
  export_dgp->add_option("--out", export_out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) {
      ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
      apply(run_flags, cfg);
      if (!draws_dir.empty()) cfg.draws_dir = draws_dir;
      cfg.validate();
      const auto report = run_experiment(cfg);
      std::ostringstream text;
      emit_report(report, parse_report_format(run_flags.format), text);
      deliver(cfg.output_path, text.str());
    } else if (*sweep) {
      ExperimentConfig cfg = sweep_config.empty() ? ExperimentConfig{} : load_config(sweep_config);
      apply(sweep_flags, cfg);
      cfg.validate();
      const auto qs = parse_grid(q_grid);
      const auto ns = parse_grid(n_grid);
      const auto cells = run_dimension_sweep(cfg, qs, ns);
      std::ostringstream text;
      emit_sweep(cells, parse_report_format(sweep_flags.format), text);
      deliver(cfg.output_path, text.str());
    } else if (*diagnose) {
      GateauxPath path;
      path.score = parse_score_kind(diag_score);
      path.delta = default_perturbation(path.score);
      path.evaluator = evaluator == "analytic" ? PathEvaluator::analytic : PathEvaluator::monte_carlo;
      path.samples = samples;
      path.seed = diag_seed;
      const auto report = orthogonality_check(path, tol);

      std::ostringstream text;
      text << "score              " << to_string(path.score) << '\n'
           << "evaluator          " << evaluator << '\n'
           << "f(0)               " << report.f0 << " (se " << report.f0_stderr << ")\n"
           << "f'(0)              " << report.fprime0 << " (se " << report.fprime0_stderr << ")\n"
           << "quadratic coef     " << report.quadratic_coef << '\n'
           << "quadratic residual " << report.quadratic_fit_residual << '\n'
           << "orthogonal         " << (report.orthogonal ? "yes" : "no") << '\n';
      if (path.evaluator == PathEvaluator::analytic && path.score != ScoreKind::naive) {
        const auto grid = parse_grid(rate_grid);
        text << "rate functional    sqrt(n) * int |f''|, perturbation ~ n^-0.3\n";
        for (const auto& p : rate_functional(path, grid)) {
          text << "  n=" << p.n << "  " << p.value << '\n';
        }
      }
      deliver(diag_out, text.str());
      if (!curve_out.empty()) {
        std::ostringstream curve;
        write_curve(report, curve);
        deliver(curve_out, curve.str());
      }
    } else if (*export_dgp) {
      RandomStream rng(export_seed);
      const DgpKind kind = parse_dgp_kind(dgp_name);
      const Dataset data = kind == DgpKind::plm ? simulate_plm(PlmConfig{export_n, export_q, 3.0}, rng)
                                                : simulate_kernel_model(export_n, rng);
      std::ostringstream text;
      write_dataset_csv(data, text);
      deliver(export_out, text.str());
    }
  } catch (const Error& e) {
    std::cerr << "orthoboot: " << to_string(e.category()) << " error: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "orthoboot: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
