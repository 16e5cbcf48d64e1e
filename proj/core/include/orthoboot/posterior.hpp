#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "orthoboot/dataset.hpp"
#include "orthoboot/random.hpp"
#include "orthoboot/scores.hpp"
#include "orthoboot/weights.hpp"

namespace orthoboot {

struct PosteriorSample {
  std::vector<double> draws;
  double theta_hat_n = 0.0;  ///< equal-weights solution on the same data and nuisance fit
  double sandwich = 0.0;     ///< sandwich variance at theta_hat_n (not divided by n)
  std::size_t n = 0;
  std::size_t rejected_draws = 0;
};

struct PosteriorOptions {
  std::size_t draws = 1000;
  WeightScheme scheme = WeightScheme::dirichlet;
  /// Threads used across draws; results do not depend on this.
  std::size_t threads = 1;
};

/// Bayesian bootstrap with a fixed plug-in nuisance fit: each draw j uses
/// weights from rng.derive(j) and solves the weighted estimating equation.
/// Degenerate draws are redrawn from the same substream and counted; more
/// than draws / 10 rejections raise DegenerateError.
PosteriorSample sample_posterior(const Dataset& data, const Score& score,
                                 std::span<const NuisanceValues> h, const PosteriorOptions& options,
                                 const RandomStream& rng);
PosteriorSample sample_posterior(const Dataset& data, const Score& score, const NuisanceFit& fit,
                                 const PosteriorOptions& options, const RandomStream& rng);

/// Runs sample_posterior once per fit (options.draws each, substream k for
/// fit k) and concatenates the draws. theta_hat_n and sandwich come from the
/// first fit.
PosteriorSample sample_posterior_collated(const Dataset& data, const Score& score,
                                          std::span<const NuisanceFit> fits,
                                          const PosteriorOptions& options, const RandomStream& rng);

struct PosteriorSummary {
  double post_mean = 0.0;
  double post_var = 0.0;
  double cred_lo = 0.0;
  double cred_hi = 0.0;
  double freq_lo = 0.0;
  double freq_hi = 0.0;
  bool covers_true = false;
};

/// Sample moments of the draws (variance with 1/(B-1)), an equal-tailed
/// percentile credible interval, and theta_hat_n -/+ z * sqrt(sandwich / n).
/// covers_true reports whether theta_true lies in the credible interval.
PosteriorSummary summarize(const PosteriorSample& sample, double level = 0.95,
                           std::optional<double> theta_true = std::nullopt);

/// Linearly interpolated quantile of sorted data at position p * (size - 1).
double linear_quantile(std::span<const double> sorted, double p);

/// One draw per line, 17 significant digits.
void write_draws(const PosteriorSample& sample, std::ostream& out);
void write_draws(const PosteriorSample& sample, const std::filesystem::path& path);

}  // namespace orthoboot
