#include "orthoboot/scores.hpp"

#include <array>
#include <cmath>
#include <string>

#include "orthoboot/error.hpp"

namespace orthoboot {

namespace {

constexpr double kDegenerateSlope = 1e-12;

constexpr std::array kPartialledOutComponents{NuisanceComponent::k_y, NuisanceComponent::e};
constexpr std::array kAipwComponents{NuisanceComponent::mu0, NuisanceComponent::mu1,
                                     NuisanceComponent::e};

double& component(NuisanceValues& h, NuisanceComponent c) {
  switch (c) {
    case NuisanceComponent::k_y: return h.k_y;
    case NuisanceComponent::e: return h.e;
    case NuisanceComponent::mu0: return h.mu0;
    case NuisanceComponent::mu1: return h.mu1;
  }
  throw InternalError("unknown nuisance component");
}

void check_lengths(const Dataset& data, std::size_t weights, std::size_t nuisance) {
  if (weights != data.size() || nuisance != data.size()) {
    throw InvalidArgument("solver: data, weights and nuisance values must have equal length");
  }
}

}  // namespace

std::string_view to_string(NuisanceComponent component) noexcept {
  switch (component) {
    case NuisanceComponent::k_y: return "k_y";
    case NuisanceComponent::e: return "e";
    case NuisanceComponent::mu0: return "mu0";
    case NuisanceComponent::mu1: return "mu1";
  }
  return "unknown";
}

NuisanceFit& NuisanceFit::set(NuisanceComponent component, Predictor predictor) {
  components_[component] = std::move(predictor);
  return *this;
}

bool NuisanceFit::has(NuisanceComponent component) const {
  auto it = components_.find(component);
  return it != components_.end() && static_cast<bool>(it->second);
}

const Predictor& NuisanceFit::get(NuisanceComponent component) const {
  auto it = components_.find(component);
  if (it == components_.end() || !it->second) {
    throw InvalidArgument("NuisanceFit: missing component '" + std::string(to_string(component)) + "'");
  }
  return it->second;
}

NuisanceValues interpolate(const NuisanceValues& h0, const NuisanceValues& h, double t) {
  auto lerp = [t](double a, double b) { return a + t * (b - a); };
  return {lerp(h0.k_y, h.k_y), lerp(h0.e, h.e), lerp(h0.mu0, h.mu0), lerp(h0.mu1, h.mu1)};
}

// ---------------------------------------------------------------------------

double partialled_out_score(const Observation& obs, double theta, const NuisanceValues& h) {
  const double v = obs.z - h.e;
  return (obs.y - h.k_y - theta * v) * v;
}

double aipw_pseudo_outcome(const Observation& obs, const NuisanceValues& h) {
  if (!(h.e > 0.0 && h.e < 1.0)) {
    throw InternalError("aipw_score: propensity " + std::to_string(h.e) + " outside (0, 1)");
  }
  return h.mu1 - h.mu0 + obs.z * (obs.y - h.mu1) / h.e -
         (1.0 - obs.z) * (obs.y - h.mu0) / (1.0 - h.e);
}

double aipw_score(const Observation& obs, double theta, const NuisanceValues& h) {
  return aipw_pseudo_outcome(obs, h) - theta;
}

std::span<const NuisanceComponent> PartialledOutScore::required() const noexcept {
  return kPartialledOutComponents;
}

double PartialledOutScore::evaluate(const Observation& obs, double theta,
                                    const NuisanceValues& h) const {
  return partialled_out_score(obs, theta, h);
}

double PartialledOutScore::dtheta(const Observation& obs, double, const NuisanceValues& h) const {
  const double v = obs.z - h.e;
  return -v * v;
}

std::optional<AffineTerms> PartialledOutScore::affine(const Observation& obs,
                                                      const NuisanceValues& h) const {
  const double v = obs.z - h.e;
  return AffineTerms{(obs.y - h.k_y) * v, -v * v};
}

std::span<const NuisanceComponent> AipwScore::required() const noexcept { return kAipwComponents; }

double AipwScore::evaluate(const Observation& obs, double theta, const NuisanceValues& h) const {
  return aipw_score(obs, theta, h);
}

double AipwScore::dtheta(const Observation&, double, const NuisanceValues&) const { return -1.0; }

std::optional<AffineTerms> AipwScore::affine(const Observation& obs, const NuisanceValues& h) const {
  return AffineTerms{aipw_pseudo_outcome(obs, h), -1.0};
}

std::span<const NuisanceComponent> NaiveScore::required() const noexcept {
  return kPartialledOutComponents;
}

double NaiveScore::evaluate(const Observation& obs, double theta, const NuisanceValues& h) const {
  return (obs.y - h.k_y - theta * (obs.z - h.e)) * obs.z;
}

double NaiveScore::dtheta(const Observation& obs, double, const NuisanceValues& h) const {
  return -(obs.z - h.e) * obs.z;
}

std::optional<AffineTerms> NaiveScore::affine(const Observation& obs, const NuisanceValues& h) const {
  return AffineTerms{(obs.y - h.k_y) * obs.z, -(obs.z - h.e) * obs.z};
}

std::string_view to_string(ScoreKind kind) noexcept {
  switch (kind) {
    case ScoreKind::partialled_out: return "partialled_out";
    case ScoreKind::aipw: return "aipw";
    case ScoreKind::naive: return "naive";
  }
  return "unknown";
}

ScoreKind parse_score_kind(std::string_view name) {
  if (name == "partialled_out" || name == "plm") return ScoreKind::partialled_out;
  if (name == "aipw") return ScoreKind::aipw;
  if (name == "naive") return ScoreKind::naive;
  throw InvalidArgument("unknown score '" + std::string(name) + "'");
}

std::unique_ptr<Score> make_score(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::partialled_out: return std::make_unique<PartialledOutScore>();
    case ScoreKind::aipw: return std::make_unique<AipwScore>();
    case ScoreKind::naive: return std::make_unique<NaiveScore>();
  }
  throw InternalError("make_score: unhandled kind");
}

std::vector<NuisanceValues> evaluate_nuisance(const Score& score, const Dataset& data,
                                              const NuisanceFit& fit) {
  std::vector<NuisanceValues> values(data.size());
  for (NuisanceComponent c : score.required()) {
    const Predictor& p = fit.get(c);
    for (std::size_t i = 0; i < data.size(); ++i) {
      component(values[i], c) = p.predict(data.x.row(i));
    }
  }
  return values;
}

// ---------------------------------------------------------------------------

SolveResult solve_weighted(const Score& score, const Dataset& data, const WeightVector& w,
                           std::span<const NuisanceValues> h) {
  check_lengths(data, w.size(), h.size());
  if (data.size() == 0 || !score.affine(data.observation(0), h[0])) {
    return solve_newton(score, data, w, h, 0.0);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto terms = *score.affine(data.observation(i), h[i]);
    num += w[i] * terms.intercept;
    den += w[i] * terms.slope;
  }
  if (std::abs(den) < kDegenerateSlope) {
    throw DegenerateError("solve_weighted: weighted score slope is numerically zero");
  }
  SolveResult result;
  result.theta_hat = -num / den;
  result.m_bar = num + den * result.theta_hat;
  return result;
}

SolveResult solve_weighted(const Score& score, const Dataset& data, const WeightVector& w,
                           const NuisanceFit& fit) {
  const auto h = evaluate_nuisance(score, data, fit);
  return solve_weighted(score, data, w, h);
}

SolveResult solve_newton(const Score& score, const Dataset& data, const WeightVector& w,
                         std::span<const NuisanceValues> h, double theta_init, double tol,
                         std::size_t max_iter) {
  check_lengths(data, w.size(), h.size());
  if (!(tol > 0.0)) throw InvalidArgument("solve_newton: tol must be positive");

  double theta = theta_init;
  for (std::size_t iter = 0;; ++iter) {
    double m_bar = 0.0;
    double slope = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto obs = data.observation(i);
      m_bar += w[i] * score.evaluate(obs, theta, h[i]);
      slope += w[i] * score.dtheta(obs, theta, h[i]);
    }
    // A flat score does not identify theta even when it happens to be zero.
    if (std::abs(slope) < kDegenerateSlope) {
      throw DegenerateError("solve_newton: zero derivative at theta = " + std::to_string(theta));
    }
    if (std::abs(m_bar) <= tol) {
      return {theta, m_bar, iter};
    }
    if (iter == max_iter) {
      throw ConvergenceError("solve_newton: no convergence after " + std::to_string(max_iter) +
                             " iterations (|m_bar| = " + std::to_string(std::abs(m_bar)) + ")");
    }
    theta -= m_bar / slope;
  }
}

double sandwich_variance(const Score& score, const Dataset& data, double theta_hat,
                         std::span<const NuisanceValues> h) {
  if (h.size() != data.size() || data.size() == 0) {
    throw InvalidArgument("sandwich_variance: data and nuisance values must be non-empty and aligned");
  }
  double bread = 0.0;
  double meat = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto obs = data.observation(i);
    const double m = score.evaluate(obs, theta_hat, h[i]);
    bread += score.dtheta(obs, theta_hat, h[i]);
    meat += m * m;
  }
  const double n = static_cast<double>(data.size());
  bread /= n;
  meat /= n;
  if (std::abs(bread) < kDegenerateSlope) {
    throw DegenerateError("sandwich_variance: mean score derivative is numerically zero");
  }
  return meat / (bread * bread);
}

double sandwich_variance(const Score& score, const Dataset& data, double theta_hat,
                         const NuisanceFit& fit) {
  return sandwich_variance(score, data, theta_hat, evaluate_nuisance(score, data, fit));
}

}  // namespace orthoboot
