#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orthoboot/dataset.hpp"
#include "orthoboot/nuisance.hpp"
#include "orthoboot/random.hpp"
#include "orthoboot/scores.hpp"
#include "orthoboot/weights.hpp"

namespace orthoboot {

enum class DgpKind { plm, kernel_model };

/// `truth` plugs in the known nuisance functions instead of fitting anything.
enum class LearnerKind { forest, kernel, truth };

std::string_view to_string(DgpKind kind) noexcept;
std::string_view to_string(LearnerKind kind) noexcept;
DgpKind parse_dgp_kind(std::string_view name);
LearnerKind parse_learner_kind(std::string_view name);

struct ExperimentConfig {
  DgpKind dgp = DgpKind::plm;
  std::size_t q = 5;  ///< covariate dimension of the partially linear design
  double theta0 = 3.0;
  ScoreKind score = ScoreKind::partialled_out;
  LearnerKind learner = LearnerKind::forest;
  /// Forest settings; the seed is replaced by a per-replicate derived seed.
  ForestConfig forest;
  std::optional<double> bandwidth;  ///< kernel learner; unset = Silverman
  double clamp_epsilon = 0.01;
  std::size_t n = 500;
  std::size_t replicates = 200;
  std::size_t bootstrap = 500;
  double level = 0.95;
  WeightScheme scheme = WeightScheme::dirichlet;
  std::uint64_t master_seed = 20240601;
  std::size_t threads = 0;            ///< replicate workers (0 = hardware)
  std::size_t bootstrap_threads = 1;  ///< draw workers inside a replicate
  std::string output_path;
  std::string draws_dir;  ///< when set, each replicate's draws go to draws_rNNNN.txt

  /// Throws ConfigError on incompatible or out-of-range settings.
  void validate() const;
};

/// Per-replicate outcome of simulate -> fit -> sample -> summarize.
struct ReplicateResult {
  double post_mean = 0.0;
  double post_var = 0.0;
  double theta_hat = 0.0;
  double sandwich = 0.0;
  double cred_lo = 0.0;
  double cred_hi = 0.0;
  double freq_lo = 0.0;
  double freq_hi = 0.0;
  bool covers = false;
  std::size_t rejected = 0;
};

struct AggregateReport {
  std::size_t n = 0;
  std::size_t q = 0;
  std::size_t replicates = 0;
  std::size_t bootstrap = 0;
  double avg_post_mean = 0.0;
  double emp_freq_mean = 0.0;
  double avg_post_var_times_n = 0.0;
  double emp_freq_var_times_n = 0.0;
  double avg_sandwich_times_n = 0.0;
  double avg_cred_lo = 0.0;
  double avg_cred_hi = 0.0;
  double freq_lo = 0.0;
  double freq_hi = 0.0;
  double coverage_pct = 0.0;
  std::size_t rejected_draw_total = 0;

  bool operator==(const AggregateReport&) const = default;
};

/// Simulated dataset for the configured design.
Dataset simulate(const ExperimentConfig& cfg, RandomStream& rng);

/// Nuisance fit for the configured score and learner. Binary-treatment
/// propensities are clamped to [eps, 1 - eps]. For AIPW a single forest on
/// (z, x) supplies mu(1, .) and mu(0, .).
NuisanceFit fit_nuisance(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed);

/// Replicate r draws everything from RandomStream(master_seed).derive(r).
ReplicateResult run_replicate(const ExperimentConfig& cfg, std::size_t r);

/// Order of `results` is replicate order. Frequentist variance uses 1/(R-1).
AggregateReport aggregate(std::span<const ReplicateResult> results, std::size_t n, std::size_t q,
                          std::size_t bootstrap);

/// Runs every replicate (in parallel when cfg.threads allows) and aggregates.
/// A failing replicate raises ReplicateError naming its index.
AggregateReport run_experiment(const ExperimentConfig& cfg);

struct SweepCell {
  std::size_t q = 0;
  std::size_t n = 0;
  AggregateReport report;
};

/// Cross product of q_grid x n_grid on the partially linear design.
std::vector<SweepCell> run_dimension_sweep(const ExperimentConfig& base,
                                           std::span<const std::size_t> q_grid,
                                           std::span<const std::size_t> n_grid);

enum class ReportFormat { text_table, delimited, structured };

std::string_view to_string(ReportFormat format) noexcept;
ReportFormat parse_report_format(std::string_view name);

void emit_report(const AggregateReport& report, ReportFormat format, std::ostream& out);
void emit_report(const AggregateReport& report, ReportFormat format, const std::filesystem::path& path);

/// Several reports side by side (text) or one row / record per report.
void emit_reports(std::span<const AggregateReport> reports, ReportFormat format, std::ostream& out);

void emit_sweep(std::span<const SweepCell> cells, ReportFormat format, std::ostream& out);

/// Inverse of emit_report(..., ReportFormat::structured, ...).
AggregateReport parse_report_json(std::string_view text);

ExperimentConfig parse_config_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace orthoboot
