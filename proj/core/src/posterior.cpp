#include "orthoboot/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "orthoboot/error.hpp"
#include "orthoboot/parallel.hpp"

namespace orthoboot {

namespace {

// Per-observation intercept/slope, hoisted out of the draw loop for affine scores.
std::optional<std::vector<AffineTerms>> affine_table(const Score& score, const Dataset& data,
                                                     std::span<const NuisanceValues> h) {
  std::vector<AffineTerms> table;
  table.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto terms = score.affine(data.observation(i), h[i]);
    if (!terms) return std::nullopt;
    table.push_back(*terms);
  }
  return table;
}

double solve_draw(const Score& score, const Dataset& data, std::span<const NuisanceValues> h,
                  const std::optional<std::vector<AffineTerms>>& table, const WeightVector& w,
                  double theta_init) {
  if (!table) {
    return solve_newton(score, data, w, h, theta_init).theta_hat;
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < table->size(); ++i) {
    num += w[i] * (*table)[i].intercept;
    den += w[i] * (*table)[i].slope;
  }
  if (std::abs(den) < 1e-12) {
    throw DegenerateError("bootstrap draw: weighted score slope is numerically zero");
  }
  return -num / den;
}

}  // namespace

PosteriorSample sample_posterior(const Dataset& data, const Score& score,
                                 std::span<const NuisanceValues> h, const PosteriorOptions& options,
                                 const RandomStream& rng) {
  data.validate();
  if (options.draws == 0) throw InvalidArgument("sample_posterior: need at least one draw");
  if (h.size() != data.size()) {
    throw InvalidArgument("sample_posterior: nuisance values do not match the data");
  }
  const std::size_t n = data.size();

  PosteriorSample sample;
  sample.n = n;
  const auto equal = equal_weights(n);
  sample.theta_hat_n = solve_weighted(score, data, equal, h).theta_hat;
  sample.sandwich = sandwich_variance(score, data, sample.theta_hat_n, h);

  const auto table = affine_table(score, data, h);
  const std::size_t max_rejections = options.draws / 10;
  sample.draws.resize(options.draws);
  std::vector<std::size_t> rejected(options.draws, 0);

  parallel_for(options.draws, options.threads, [&](std::size_t j) {
    RandomStream stream = rng.derive(j);
    for (;;) {
      const auto w = draw_weights(options.scheme, n, stream);
      try {
        sample.draws[j] = solve_draw(score, data, h, table, w, sample.theta_hat_n);
        return;
      } catch (const DegenerateError&) {
        if (++rejected[j] > max_rejections) {
          throw DegenerateError("sample_posterior: more than " + std::to_string(max_rejections) +
                                " degenerate draws");
        }
      }
    }
  });

  sample.rejected_draws = std::accumulate(rejected.begin(), rejected.end(), std::size_t{0});
  if (sample.rejected_draws > max_rejections) {
    throw DegenerateError("sample_posterior: " + std::to_string(sample.rejected_draws) +
                          " degenerate draws out of " + std::to_string(options.draws));
  }
  return sample;
}

PosteriorSample sample_posterior(const Dataset& data, const Score& score, const NuisanceFit& fit,
                                 const PosteriorOptions& options, const RandomStream& rng) {
  const auto h = evaluate_nuisance(score, data, fit);
  return sample_posterior(data, score, h, options, rng);
}

PosteriorSample sample_posterior_collated(const Dataset& data, const Score& score,
                                          std::span<const NuisanceFit> fits,
                                          const PosteriorOptions& options, const RandomStream& rng) {
  if (fits.empty()) throw InvalidArgument("sample_posterior_collated: no nuisance fits");
  PosteriorSample collated;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    auto part = sample_posterior(data, score, fits[k], options, rng.derive(k));
    if (k == 0) {
      collated.theta_hat_n = part.theta_hat_n;
      collated.sandwich = part.sandwich;
      collated.n = part.n;
    }
    collated.rejected_draws += part.rejected_draws;
    collated.draws.insert(collated.draws.end(), part.draws.begin(), part.draws.end());
  }
  return collated;
}

double linear_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("linear_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("linear_quantile: p must lie in [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PosteriorSummary summarize(const PosteriorSample& sample, double level,
                           std::optional<double> theta_true) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("summarize: level must lie in (0, 1)");
  const std::size_t b = sample.draws.size();
  if (b < 2) throw InvalidArgument("summarize: posterior variance needs at least 2 draws");
  if (sample.n == 0) throw InvalidArgument("summarize: sample has n = 0");

  PosteriorSummary s;
  s.post_mean = std::accumulate(sample.draws.begin(), sample.draws.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double d : sample.draws) ss += (d - s.post_mean) * (d - s.post_mean);
  s.post_var = ss / static_cast<double>(b - 1);

  std::vector<double> sorted = sample.draws;
  std::sort(sorted.begin(), sorted.end());
  const double tail = 0.5 * (1.0 - level);
  s.cred_lo = linear_quantile(sorted, tail);
  s.cred_hi = linear_quantile(sorted, 1.0 - tail);

  const double z = boost::math::quantile(boost::math::normal(), 1.0 - tail);
  const double half = z * std::sqrt(sample.sandwich / static_cast<double>(sample.n));
  s.freq_lo = sample.theta_hat_n - half;
  s.freq_hi = sample.theta_hat_n + half;

  if (theta_true) {
    s.covers_true = s.cred_lo <= *theta_true && *theta_true <= s.cred_hi;
  }
  return s;
}

void write_draws(const PosteriorSample& sample, std::ostream& out) {
  char buf[32];
  for (double d : sample.draws) {
    std::snprintf(buf, sizeof buf, "%.17g\n", d);
    out << buf;
  }
}

void write_draws(const PosteriorSample& sample, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_draws(sample, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace orthoboot
