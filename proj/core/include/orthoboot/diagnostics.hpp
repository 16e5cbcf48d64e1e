#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "orthoboot/dataset.hpp"
#include "orthoboot/harness.hpp"
#include "orthoboot/nuisance.hpp"
#include "orthoboot/random.hpp"
#include "orthoboot/scores.hpp"

namespace orthoboot {

/// Direction h - h0 of a nuisance perturbation. Unset components are zero.
struct Perturbation {
  Predictor::Function k_y;
  Predictor::Function e;
  Predictor::Function mu0;
  Predictor::Function mu1;

  NuisanceValues at(std::span<const double> x) const;
  Perturbation scaled(double factor) const;

  static Perturbation constant(double dk_y, double de, double dmu0 = 0.0, double dmu1 = 0.0);
};

/// h0 of the partially linear design at x: k_y = theta0 e0 + g0, e = e0,
/// mu0 = g0, mu1 = theta0 + g0.
NuisanceValues plm_truth_values(std::span<const double> x, double theta0);

/// X ~ N(0, Sigma) rows of the partially linear design.
CovariateMatrix draw_plm_covariates(std::size_t q, std::size_t count, RandomStream& rng);

/// h0 and h - h0 tabulated once on a covariate sample; outer expectations
/// over X become averages over its rows.
struct PathTable {
  double theta0 = 3.0;
  std::vector<NuisanceValues> h0;
  std::vector<NuisanceValues> delta;

  PathTable scaled(double factor) const;
};

PathTable tabulate_path(const CovariateMatrix& xs, double theta0, const Perturbation& delta);

/// f(t) = t^2 E[dk de - theta0 de^2] for the partialled-out score.
double f_analytic_plm(const PathTable& path, double t);
double f_second_plm(const PathTable& path, double t);

/// Closed-form f, f' and f'' of the AIPW score along the path. Throws
/// InvalidArgument when a propensity denominator drops below 1e-6.
double f_analytic_aipw(const PathTable& path, double t);
double f_prime_aipw(const PathTable& path, double t);
double f_second_aipw(const PathTable& path, double t);

/// The two summands of the AIPW f'': the treated-arm term carries the
/// mu(1, .) perturbation and the control-arm term the mu(0, .) one.
struct AipwSecondTerms {
  double treated = 0.0;
  double control = 0.0;
};
AipwSecondTerms f_second_aipw_terms(const PathTable& path, double t);

/// Dispatch on score; only partialled_out and aipw have closed forms.
double f_analytic(ScoreKind score, const PathTable& path, double t);
double f_second(ScoreKind score, const PathTable& path, double t);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Direct simulation of f(t) = E[m(O; theta0, h0 + t (h - h0))] over `mc`
/// fresh observations of the partially linear design.
McEstimate f_monte_carlo(const Score& score, double theta0, std::size_t q, const Perturbation& delta,
                         double t, std::size_t mc, RandomStream& rng);

/// Central difference of f at t with common random numbers: the per-observation
/// difference quotient is averaged, so its standard error is exact.
McEstimate f_prime_monte_carlo(const Score& score, double theta0, std::size_t q,
                               const Perturbation& delta, double t, double step, std::size_t mc,
                               RandomStream& rng);

enum class PathEvaluator { analytic, monte_carlo };

struct GateauxPath {
  ScoreKind score = ScoreKind::partialled_out;
  double theta0 = 3.0;
  std::size_t q = 5;
  Perturbation delta;
  PathEvaluator evaluator = PathEvaluator::analytic;
  /// Covariate sample size (analytic) or simulated observations (Monte Carlo).
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 7;
};

struct CurvePoint {
  double t = 0.0;
  double f = 0.0;
  double std_error = 0.0;
};

struct OrthoReport {
  double f0 = 0.0;
  double f0_stderr = 0.0;
  double fprime0 = 0.0;
  double fprime0_stderr = 0.0;
  double quadratic_coef = 0.0;          ///< least-squares c in f(t) ~ c t^2
  double quadratic_fit_residual = 0.0;  ///< max |f(t) - c t^2| over the curve
  std::vector<CurvePoint> curve;        ///< grid on [0, 1]
  bool orthogonal = true;               ///< |f'(0)| <= tol + 4 stderr
};

inline constexpr double kFiniteDifferenceStep = 1e-4;

OrthoReport orthogonality_check(const GateauxPath& path, double tol, std::size_t grid_points = 11);

struct RatePoint {
  std::size_t n = 0;
  double value = 0.0;  ///< sqrt(n) * integral_0^1 |f''(t)| dt
};

/// Shrinks the perturbation by n^(-rate_exponent) for each n and integrates
/// |f''| with 64-point composite Gauss-Legendre. Analytic evaluator only.
std::vector<RatePoint> rate_functional(const GateauxPath& path, std::span<const std::size_t> n_grid,
                                       double rate_exponent = 0.3);

/// Composite Gauss-Legendre on [0, 1]: 16 panels of 4 nodes.
double integrate_unit_interval(const std::function<double(double)>& fn);

/// Header t,f,stderr then one line per curve point.
void write_curve(const OrthoReport& report, std::ostream& out);

struct NonOrthoReport {
  AggregateReport orthogonal;   ///< partialled-out score, configured learner
  AggregateReport naive_slow;   ///< naive score, slow forest
  AggregateReport naive_truth;  ///< naive score, true nuisance
  double theta0 = 0.0;
};

/// Runs the posterior pipeline three times on the partially linear design to
/// show how a non-orthogonal score reacts to nuisance error.
NonOrthoReport nonortho_probe(const ExperimentConfig& base, const ForestConfig& slow_forest);

void write_nonortho_report(const NonOrthoReport& report, std::ostream& out);

}  // namespace orthoboot
