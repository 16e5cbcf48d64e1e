#include "orthoboot/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "orthoboot/dgp.hpp"
#include "orthoboot/error.hpp"
#include "orthoboot/parallel.hpp"
#include "orthoboot/posterior.hpp"

namespace orthoboot {

namespace {

std::vector<double> first_column(const CovariateMatrix& x) {
  std::vector<double> col(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, 0);
  return col;
}

// [z, x1, ..., xq] design for the joint outcome forest.
CovariateMatrix with_treatment(const Dataset& data) {
  CovariateMatrix joint(data.size(), data.dim() + 1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = joint.row(i);
    row[0] = data.z[i];
    const auto x = data.x.row(i);
    std::copy(x.begin(), x.end(), row.begin() + 1);
  }
  return joint;
}

Predictor at_arm(Predictor joint, double arm) {
  return Predictor::from_function([joint = std::move(joint), arm](std::span<const double> x) {
    std::vector<double> query(x.size() + 1);
    query[0] = arm;
    std::copy(x.begin(), x.end(), query.begin() + 1);
    return joint.predict(query);
  });
}

}  // namespace

std::string_view to_string(DgpKind kind) noexcept {
  switch (kind) {
    case DgpKind::plm: return "plm";
    case DgpKind::kernel_model: return "kernel_model";
  }
  return "unknown";
}

std::string_view to_string(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::forest: return "forest";
    case LearnerKind::kernel: return "kernel";
    case LearnerKind::truth: return "truth";
  }
  return "unknown";
}

DgpKind parse_dgp_kind(std::string_view name) {
  if (name == "plm") return DgpKind::plm;
  if (name == "kernel_model" || name == "kernel") return DgpKind::kernel_model;
  throw ConfigError("unknown dgp '" + std::string(name) + "'");
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "forest") return LearnerKind::forest;
  if (name == "kernel") return LearnerKind::kernel;
  if (name == "truth") return LearnerKind::truth;
  throw ConfigError("unknown learner '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (n < 2) throw ConfigError("n must be at least 2");
  if (replicates == 0) throw ConfigError("replicates must be at least 1");
  if (bootstrap < 2) throw ConfigError("bootstrap must be at least 2");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5)) throw ConfigError("clamp_epsilon must lie in (0, 0.5)");
  if (dgp == DgpKind::plm && q < 5) throw ConfigError("the plm design needs q >= 5");
  if (learner == LearnerKind::kernel && dgp != DgpKind::kernel_model) {
    throw ConfigError("the kernel learner is only available with the kernel_model dgp");
  }
  if (score == ScoreKind::aipw && dgp != DgpKind::plm) {
    throw ConfigError("the aipw score needs the binary-treatment plm dgp");
  }
  if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
  try {
    forest.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

Dataset simulate(const ExperimentConfig& cfg, RandomStream& rng) {
  switch (cfg.dgp) {
    case DgpKind::plm: return simulate_plm(PlmConfig{cfg.n, cfg.q, cfg.theta0}, rng);
    case DgpKind::kernel_model: return simulate_kernel_model(cfg.n, rng, cfg.theta0);
  }
  throw InternalError("simulate: unhandled dgp");
}

NuisanceFit fit_nuisance(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed) {
  NuisanceFit fit;
  const bool binary_treatment = cfg.dgp == DgpKind::plm;
  const ClampSpec clamp{cfg.clamp_epsilon};

  if (cfg.learner == LearnerKind::truth) {
    if (cfg.dgp == DgpKind::plm) {
      fit.set(NuisanceComponent::k_y, plm_true_ky(cfg.theta0))
          .set(NuisanceComponent::e, plm_true_e())
          .set(NuisanceComponent::mu0, plm_true_mu(cfg.theta0, 0.0))
          .set(NuisanceComponent::mu1, plm_true_mu(cfg.theta0, 1.0));
    } else {
      fit.set(NuisanceComponent::k_y, kernel_true_ky(cfg.theta0))
          .set(NuisanceComponent::e, kernel_true_e());
    }
    return fit;
  }

  if (cfg.learner == LearnerKind::kernel) {
    const auto x = first_column(data.x);
    fit.set(NuisanceComponent::k_y, fit_kernel(x, data.y, cfg.bandwidth))
        .set(NuisanceComponent::e, fit_kernel(x, data.z, cfg.bandwidth));
    return fit;
  }

  ForestConfig forest = cfg.forest;
  forest.seed = mix_seed(seed, 1);
  Predictor e = fit_forest(data.x, data.z, forest);
  fit.set(NuisanceComponent::e, binary_treatment ? clamp_propensity(std::move(e), clamp) : std::move(e));

  if (cfg.score == ScoreKind::aipw) {
    forest.seed = mix_seed(seed, 2);
    Predictor joint = fit_forest(with_treatment(data), data.y, forest);
    fit.set(NuisanceComponent::mu0, at_arm(joint, 0.0)).set(NuisanceComponent::mu1, at_arm(joint, 1.0));
  } else {
    forest.seed = mix_seed(seed, 3);
    fit.set(NuisanceComponent::k_y, fit_forest(data.x, data.y, forest));
  }
  return fit;
}

ReplicateResult run_replicate(const ExperimentConfig& cfg, std::size_t r) {
  const RandomStream stream = RandomStream(cfg.master_seed).derive(r);
  RandomStream data_rng = stream.derive(0);
  const Dataset data = simulate(cfg, data_rng);
  const NuisanceFit fit = fit_nuisance(cfg, data, stream.derive(1).seed());
  const auto score = make_score(cfg.score);

  PosteriorOptions options;
  options.draws = cfg.bootstrap;
  options.scheme = cfg.scheme;
  options.threads = cfg.bootstrap_threads;
  const auto sample = sample_posterior(data, *score, fit, options, stream.derive(2));
  const auto summary = summarize(sample, cfg.level, cfg.theta0);

  if (!cfg.draws_dir.empty()) {
    char name[32];
    std::snprintf(name, sizeof name, "draws_r%04zu.txt", r);
    write_draws(sample, std::filesystem::path(cfg.draws_dir) / name);
  }

  ReplicateResult result;
  result.post_mean = summary.post_mean;
  result.post_var = summary.post_var;
  result.theta_hat = sample.theta_hat_n;
  result.sandwich = sample.sandwich;
  result.cred_lo = summary.cred_lo;
  result.cred_hi = summary.cred_hi;
  result.freq_lo = summary.freq_lo;
  result.freq_hi = summary.freq_hi;
  result.covers = summary.covers_true;
  result.rejected = sample.rejected_draws;
  return result;
}

AggregateReport aggregate(std::span<const ReplicateResult> results, std::size_t n, std::size_t q,
                          std::size_t bootstrap) {
  if (results.empty()) throw InvalidArgument("aggregate: no replicate results");
  const double count = static_cast<double>(results.size());
  const double scale = static_cast<double>(n);

  AggregateReport report;
  report.n = n;
  report.q = q;
  report.replicates = results.size();
  report.bootstrap = bootstrap;
  double covered = 0.0;
  for (const auto& r : results) {
    report.avg_post_mean += r.post_mean;
    report.emp_freq_mean += r.theta_hat;
    report.avg_post_var_times_n += scale * r.post_var;
    report.avg_sandwich_times_n += r.sandwich;
    report.avg_cred_lo += r.cred_lo;
    report.avg_cred_hi += r.cred_hi;
    report.freq_lo += r.freq_lo;
    report.freq_hi += r.freq_hi;
    report.rejected_draw_total += r.rejected;
    covered += r.covers ? 1.0 : 0.0;
  }
  report.avg_post_mean /= count;
  report.emp_freq_mean /= count;
  report.avg_post_var_times_n /= count;
  report.avg_sandwich_times_n /= count;
  report.avg_cred_lo /= count;
  report.avg_cred_hi /= count;
  report.freq_lo /= count;
  report.freq_hi /= count;
  report.coverage_pct = 100.0 * covered / count;

  if (results.size() > 1) {
    double ss = 0.0;
    for (const auto& r : results) {
      const double d = r.theta_hat - report.emp_freq_mean;
      ss += d * d;
    }
    report.emp_freq_var_times_n = scale * ss / (count - 1.0);
  }
  return report;
}

AggregateReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.draws_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.draws_dir, ec);
    if (ec) throw IoError("cannot create draws directory '" + cfg.draws_dir + "': " + ec.message());
  }
  std::vector<ReplicateResult> results(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    try {
      results[r] = run_replicate(cfg, r);
    } catch (const ReplicateError&) {
      throw;
    } catch (const Error& e) {
      throw ReplicateError(r, e.category(), e.what());
    } catch (const std::exception& e) {
      throw ReplicateError(r, ErrorCategory::internal, e.what());
    }
  });
  return aggregate(results, cfg.n, cfg.dgp == DgpKind::plm ? cfg.q : 1, cfg.bootstrap);
}

std::vector<SweepCell> run_dimension_sweep(const ExperimentConfig& base,
                                           std::span<const std::size_t> q_grid,
                                           std::span<const std::size_t> n_grid) {
  if (base.dgp != DgpKind::plm) throw ConfigError("the dimension sweep runs on the plm dgp");
  std::vector<SweepCell> cells;
  for (std::size_t q : q_grid) {
    for (std::size_t n : n_grid) {
      ExperimentConfig cfg = base;
      cfg.q = q;
      cfg.n = n;
      cells.push_back({q, n, run_experiment(cfg)});
    }
  }
  return cells;
}

}  // namespace orthoboot
