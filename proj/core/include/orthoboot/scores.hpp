#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "orthoboot/dataset.hpp"
#include "orthoboot/nuisance.hpp"
#include "orthoboot/weights.hpp"

namespace orthoboot {

enum class NuisanceComponent {
  k_y,  ///< E(Y | X)
  e,    ///< E(Z | X), the propensity for binary Z
  mu0,  ///< outcome regression at Z = 0
  mu1,  ///< outcome regression at Z = 1
};

std::string_view to_string(NuisanceComponent component) noexcept;

/// Named set of fitted nuisance predictors.
class NuisanceFit {
 public:
  NuisanceFit& set(NuisanceComponent component, Predictor predictor);
  bool has(NuisanceComponent component) const;
  const Predictor& get(NuisanceComponent component) const;

 private:
  std::map<NuisanceComponent, Predictor> components_;
};

/// Nuisance components evaluated at one covariate vector. Unused slots are NaN.
struct NuisanceValues {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
  double k_y = kUnset;
  double e = kUnset;
  double mu0 = kUnset;
  double mu1 = kUnset;
};

/// h0 + t (h - h0), componentwise.
NuisanceValues interpolate(const NuisanceValues& h0, const NuisanceValues& h, double t);

/// m(O; theta, h) = intercept + slope * theta.
struct AffineTerms {
  double intercept;
  double slope;
};

/// Scalar score function m(O; theta, h).
class Score {
 public:
  virtual ~Score() = default;

  virtual std::string_view name() const noexcept = 0;
  virtual std::span<const NuisanceComponent> required() const noexcept = 0;
  virtual double evaluate(const Observation& obs, double theta, const NuisanceValues& h) const = 0;
  /// Derivative of evaluate() in theta.
  virtual double dtheta(const Observation& obs, double theta, const NuisanceValues& h) const = 0;
  /// Set for scores that are affine in theta; enables the closed-form solver.
  virtual std::optional<AffineTerms> affine(const Observation& obs, const NuisanceValues& h) const {
    (void)obs;
    (void)h;
    return std::nullopt;
  }
};

/// [y - k_y(x) - theta (z - e(x))] (z - e(x)).
double partialled_out_score(const Observation& obs, double theta, const NuisanceValues& h);

/// mu1 - mu0 + z (y - mu1) / e - (1 - z)(y - mu0) / (1 - e).
double aipw_pseudo_outcome(const Observation& obs, const NuisanceValues& h);

/// -theta + aipw_pseudo_outcome(obs, h). Throws InternalError if e is outside (0, 1).
double aipw_score(const Observation& obs, double theta, const NuisanceValues& h);

class PartialledOutScore final : public Score {
 public:
  std::string_view name() const noexcept override { return "partialled_out"; }
  std::span<const NuisanceComponent> required() const noexcept override;
  double evaluate(const Observation& obs, double theta, const NuisanceValues& h) const override;
  double dtheta(const Observation& obs, double theta, const NuisanceValues& h) const override;
  std::optional<AffineTerms> affine(const Observation& obs, const NuisanceValues& h) const override;
};

class AipwScore final : public Score {
 public:
  std::string_view name() const noexcept override { return "aipw"; }
  std::span<const NuisanceComponent> required() const noexcept override;
  double evaluate(const Observation& obs, double theta, const NuisanceValues& h) const override;
  double dtheta(const Observation& obs, double theta, const NuisanceValues& h) const override;
  std::optional<AffineTerms> affine(const Observation& obs, const NuisanceValues& h) const override;
};

/// [y - k_y(x) - theta (z - e(x))] z. Identifies theta0 in the partially
/// linear model but is not Neyman orthogonal: its Gateaux derivative in the
/// direction (dk, de) is E[(theta0 de - dk) e0(X)].
class NaiveScore final : public Score {
 public:
  std::string_view name() const noexcept override { return "naive"; }
  std::span<const NuisanceComponent> required() const noexcept override;
  double evaluate(const Observation& obs, double theta, const NuisanceValues& h) const override;
  double dtheta(const Observation& obs, double theta, const NuisanceValues& h) const override;
  std::optional<AffineTerms> affine(const Observation& obs, const NuisanceValues& h) const override;
};

enum class ScoreKind { partialled_out, aipw, naive };

std::string_view to_string(ScoreKind kind) noexcept;
ScoreKind parse_score_kind(std::string_view name);
std::unique_ptr<Score> make_score(ScoreKind kind);

/// Evaluates every component the score needs at each observation. Throws
/// InvalidArgument when the fit lacks a required component.
std::vector<NuisanceValues> evaluate_nuisance(const Score& score, const Dataset& data,
                                              const NuisanceFit& fit);

struct SolveResult {
  double theta_hat = 0.0;
  double m_bar = 0.0;  ///< weighted score at theta_hat
  std::size_t iterations = 0;
};

/// Solves sum_i w_i m(O_i; theta, h) = 0. Affine scores use the exact
/// ratio -sum w a / sum w b; throws DegenerateError when |sum w b| < 1e-12.
/// Other scores fall back to solve_newton from theta = 0.
SolveResult solve_weighted(const Score& score, const Dataset& data, const WeightVector& w,
                           std::span<const NuisanceValues> h);
SolveResult solve_weighted(const Score& score, const Dataset& data, const WeightVector& w,
                           const NuisanceFit& fit);

/// Newton-Raphson on the weighted score. Throws ConvergenceError after
/// max_iter steps and DegenerateError on a vanishing derivative.
SolveResult solve_newton(const Score& score, const Dataset& data, const WeightVector& w,
                         std::span<const NuisanceValues> h, double theta_init, double tol = 1e-10,
                         std::size_t max_iter = 100);

/// M^-1 (n^-1 sum m^2) M^-1 with M = n^-1 sum dm/dtheta, all at theta_hat.
double sandwich_variance(const Score& score, const Dataset& data, double theta_hat,
                         std::span<const NuisanceValues> h);
double sandwich_variance(const Score& score, const Dataset& data, double theta_hat,
                         const NuisanceFit& fit);

}  // namespace orthoboot
