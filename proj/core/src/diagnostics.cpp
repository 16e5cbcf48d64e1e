#include "orthoboot/diagnostics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "orthoboot/dgp.hpp"
#include "orthoboot/error.hpp"

namespace orthoboot {

namespace {

constexpr double kPositivityFloor = 1e-6;
constexpr std::size_t kQuadraturePanels = 16;

double eval_or_zero(const Predictor::Function& fn, std::span<const double> x) {
  return fn ? fn(x) : 0.0;
}

Predictor::Function scale_fn(const Predictor::Function& fn, double factor) {
  if (!fn) return {};
  return [fn, factor](std::span<const double> x) { return factor * fn(x); };
}

NuisanceValues add(const NuisanceValues& a, const NuisanceValues& b) {
  return {a.k_y + b.k_y, a.e + b.e, a.mu0 + b.mu0, a.mu1 + b.mu1};
}

void require_rows(const PathTable& path) {
  if (path.h0.empty() || path.h0.size() != path.delta.size()) {
    throw InvalidArgument("Gateaux path: empty or misaligned covariate sample");
  }
}

struct AipwDenominators {
  double treated;
  double control;
};

AipwDenominators aipw_denominators(const NuisanceValues& h0, const NuisanceValues& d, double t) {
  AipwDenominators den{h0.e + t * d.e, 1.0 - h0.e - t * d.e};
  if (den.treated < kPositivityFloor || den.control < kPositivityFloor) {
    throw InvalidArgument("AIPW path: positivity violated (propensity denominator below 1e-6)");
  }
  return den;
}

// Sample mean and standard error of per-observation contributions.
McEstimate mean_and_se(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

Dataset simulate_path_sample(double theta0, std::size_t q, std::size_t mc, RandomStream& rng) {
  if (mc < 100) throw InvalidArgument("Monte Carlo path evaluation needs at least 100 samples");
  return simulate_plm(PlmConfig{mc, q, theta0}, rng);
}

}  // namespace

NuisanceValues Perturbation::at(std::span<const double> x) const {
  return {eval_or_zero(k_y, x), eval_or_zero(e, x), eval_or_zero(mu0, x), eval_or_zero(mu1, x)};
}

Perturbation Perturbation::scaled(double factor) const {
  return {scale_fn(k_y, factor), scale_fn(e, factor), scale_fn(mu0, factor), scale_fn(mu1, factor)};
}

Perturbation Perturbation::constant(double dk_y, double de, double dmu0, double dmu1) {
  auto c = [](double v) -> Predictor::Function {
    if (v == 0.0) return {};
    return [v](std::span<const double>) { return v; };
  };
  return {c(dk_y), c(de), c(dmu0), c(dmu1)};
}

NuisanceValues plm_truth_values(std::span<const double> x, double theta0) {
  const double e0 = plm_e0(x);
  const double g0 = plm_g0(x);
  return {theta0 * e0 + g0, e0, g0, theta0 + g0};
}

CovariateMatrix draw_plm_covariates(std::size_t q, std::size_t count, RandomStream& rng) {
  return simulate_plm(PlmConfig{count, q, 0.0}, rng).x;
}

PathTable PathTable::scaled(double factor) const {
  PathTable out = *this;
  for (auto& d : out.delta) {
    d = {factor * d.k_y, factor * d.e, factor * d.mu0, factor * d.mu1};
  }
  return out;
}

PathTable tabulate_path(const CovariateMatrix& xs, double theta0, const Perturbation& delta) {
  if (xs.rows() == 0) throw InvalidArgument("tabulate_path: empty covariate sample");
  PathTable path;
  path.theta0 = theta0;
  path.h0.reserve(xs.rows());
  path.delta.reserve(xs.rows());
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    path.h0.push_back(plm_truth_values(xs.row(i), theta0));
    path.delta.push_back(delta.at(xs.row(i)));
  }
  return path;
}

double f_analytic_plm(const PathTable& path, double t) {
  require_rows(path);
  double k = 0.0;
  for (const auto& d : path.delta) {
    k += d.k_y * d.e - path.theta0 * d.e * d.e;
  }
  return t * t * k / static_cast<double>(path.delta.size());
}

double f_second_plm(const PathTable& path, double) { return 2.0 * f_analytic_plm(path, 1.0); }

double f_analytic_aipw(const PathTable& path, double t) {
  require_rows(path);
  double acc = 0.0;
  for (std::size_t i = 0; i < path.h0.size(); ++i) {
    const auto& h0 = path.h0[i];
    const auto& d = path.delta[i];
    const auto den = aipw_denominators(h0, d, t);
    acc += (h0.mu1 - h0.mu0 - path.theta0) + t * d.mu1 - t * d.mu0 -
           t * h0.e * d.mu1 / den.treated + t * (1.0 - h0.e) * d.mu0 / den.control;
  }
  return acc / static_cast<double>(path.h0.size());
}

double f_prime_aipw(const PathTable& path, double t) {
  require_rows(path);
  double acc = 0.0;
  for (std::size_t i = 0; i < path.h0.size(); ++i) {
    const auto& h0 = path.h0[i];
    const auto& d = path.delta[i];
    const auto den = aipw_denominators(h0, d, t);
    acc += d.mu1 - d.mu0 - h0.e * h0.e * d.mu1 / (den.treated * den.treated) +
           (1.0 - h0.e) * (1.0 - h0.e) * d.mu0 / (den.control * den.control);
  }
  return acc / static_cast<double>(path.h0.size());
}

AipwSecondTerms f_second_aipw_terms(const PathTable& path, double t) {
  require_rows(path);
  AipwSecondTerms terms;
  for (std::size_t i = 0; i < path.h0.size(); ++i) {
    const auto& h0 = path.h0[i];
    const auto& d = path.delta[i];
    const auto den = aipw_denominators(h0, d, t);
    terms.treated += 2.0 * h0.e * h0.e * d.mu1 * d.e / (den.treated * den.treated * den.treated);
    terms.control += 2.0 * (1.0 - h0.e) * (1.0 - h0.e) * d.mu0 * d.e /
                     (den.control * den.control * den.control);
  }
  const double n = static_cast<double>(path.h0.size());
  terms.treated /= n;
  terms.control /= n;
  return terms;
}

double f_second_aipw(const PathTable& path, double t) {
  const auto terms = f_second_aipw_terms(path, t);
  return terms.treated + terms.control;
}

double f_analytic(ScoreKind score, const PathTable& path, double t) {
  switch (score) {
    case ScoreKind::partialled_out: return f_analytic_plm(path, t);
    case ScoreKind::aipw: return f_analytic_aipw(path, t);
    case ScoreKind::naive: break;
  }
  throw InvalidArgument("no closed-form Gateaux path for score '" + std::string(to_string(score)) + "'");
}

double f_second(ScoreKind score, const PathTable& path, double t) {
  switch (score) {
    case ScoreKind::partialled_out: return f_second_plm(path, t);
    case ScoreKind::aipw: return f_second_aipw(path, t);
    case ScoreKind::naive: break;
  }
  throw InvalidArgument("no closed-form Gateaux path for score '" + std::string(to_string(score)) + "'");
}

McEstimate f_monte_carlo(const Score& score, double theta0, std::size_t q, const Perturbation& delta,
                         double t, std::size_t mc, RandomStream& rng) {
  const Dataset data = simulate_path_sample(theta0, q, mc, rng);
  std::vector<double> values(mc);
  for (std::size_t i = 0; i < mc; ++i) {
    const auto obs = data.observation(i);
    const auto h0 = plm_truth_values(obs.x, theta0);
    const auto h = add(h0, delta.at(obs.x));
    values[i] = score.evaluate(obs, theta0, interpolate(h0, h, t));
  }
  return mean_and_se(values);
}

McEstimate f_prime_monte_carlo(const Score& score, double theta0, std::size_t q,
                               const Perturbation& delta, double t, double step, std::size_t mc,
                               RandomStream& rng) {
  if (!(step > 0.0)) throw InvalidArgument("f_prime_monte_carlo: step must be positive");
  const Dataset data = simulate_path_sample(theta0, q, mc, rng);
  std::vector<double> values(mc);
  for (std::size_t i = 0; i < mc; ++i) {
    const auto obs = data.observation(i);
    const auto h0 = plm_truth_values(obs.x, theta0);
    const auto h = add(h0, delta.at(obs.x));
    const double up = score.evaluate(obs, theta0, interpolate(h0, h, t + step));
    const double down = score.evaluate(obs, theta0, interpolate(h0, h, t - step));
    values[i] = (up - down) / (2.0 * step);
  }
  return mean_and_se(values);
}

OrthoReport orthogonality_check(const GateauxPath& path, double tol, std::size_t grid_points) {
  if (grid_points < 2) throw InvalidArgument("orthogonality_check: need at least 2 grid points");
  OrthoReport report;
  std::vector<double> grid(grid_points);
  for (std::size_t k = 0; k < grid_points; ++k) {
    grid[k] = static_cast<double>(k) / static_cast<double>(grid_points - 1);
  }
  const double h = kFiniteDifferenceStep;

  if (path.evaluator == PathEvaluator::analytic) {
    RandomStream rng(path.seed);
    const auto xs = draw_plm_covariates(path.q, path.samples, rng);
    const auto table = tabulate_path(xs, path.theta0, path.delta);
    report.f0 = f_analytic(path.score, table, 0.0);
    report.fprime0 = (f_analytic(path.score, table, h) - f_analytic(path.score, table, -h)) / (2.0 * h);
    for (double t : grid) report.curve.push_back({t, f_analytic(path.score, table, t), 0.0});
  } else {
    const auto score = make_score(path.score);
    // Same seed for every evaluation: common random numbers along the path.
    auto fresh = [&] { return RandomStream(path.seed); };
    {
      auto rng = fresh();
      const auto f0 = f_monte_carlo(*score, path.theta0, path.q, path.delta, 0.0, path.samples, rng);
      report.f0 = f0.value;
      report.f0_stderr = f0.std_error;
    }
    {
      auto rng = fresh();
      const auto d = f_prime_monte_carlo(*score, path.theta0, path.q, path.delta, 0.0, h, path.samples, rng);
      report.fprime0 = d.value;
      report.fprime0_stderr = d.std_error;
    }
    for (double t : grid) {
      auto rng = fresh();
      const auto est = f_monte_carlo(*score, path.theta0, path.q, path.delta, t, path.samples, rng);
      report.curve.push_back({t, est.value, est.std_error});
    }
  }

  double num = 0.0;
  double den = 0.0;
  for (const auto& p : report.curve) {
    num += p.t * p.t * p.f;
    den += p.t * p.t * p.t * p.t;
  }
  report.quadratic_coef = num / den;
  for (const auto& p : report.curve) {
    report.quadratic_fit_residual =
        std::max(report.quadratic_fit_residual, std::abs(p.f - report.quadratic_coef * p.t * p.t));
  }
  report.orthogonal = std::abs(report.fprime0) <= tol + 4.0 * report.fprime0_stderr;
  return report;
}

double integrate_unit_interval(const std::function<double(double)>& fn) {
  using Rule = boost::math::quadrature::gauss<double, 4>;
  const double width = 1.0 / static_cast<double>(kQuadraturePanels);
  double total = 0.0;
  for (std::size_t k = 0; k < kQuadraturePanels; ++k) {
    const double a = width * static_cast<double>(k);
    total += Rule::integrate(fn, a, a + width);
  }
  return total;
}

std::vector<RatePoint> rate_functional(const GateauxPath& path, std::span<const std::size_t> n_grid,
                                       double rate_exponent) {
  if (path.evaluator != PathEvaluator::analytic) {
    throw InvalidArgument("rate_functional: needs the analytic evaluator");
  }
  RandomStream rng(path.seed);
  const auto xs = draw_plm_covariates(path.q, path.samples, rng);
  const auto unit = tabulate_path(xs, path.theta0, path.delta);

  std::vector<RatePoint> out;
  for (std::size_t n : n_grid) {
    if (n == 0) throw InvalidArgument("rate_functional: n must be positive");
    const double nd = static_cast<double>(n);
    const auto table = unit.scaled(std::pow(nd, -rate_exponent));
    const double integral =
        integrate_unit_interval([&](double t) { return std::abs(f_second(path.score, table, t)); });
    out.push_back({n, std::sqrt(nd) * integral});
  }
  return out;
}

void write_curve(const OrthoReport& report, std::ostream& out) {
  out << "t,f,stderr\n";
  char buf[96];
  for (const auto& p : report.curve) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.t, p.f, p.std_error);
    out << buf;
  }
}

NonOrthoReport nonortho_probe(const ExperimentConfig& base, const ForestConfig& slow_forest) {
  if (base.dgp != DgpKind::plm) throw ConfigError("nonortho_probe runs on the plm dgp");
  NonOrthoReport report;
  report.theta0 = base.theta0;

  ExperimentConfig cfg = base;
  cfg.score = ScoreKind::partialled_out;
  report.orthogonal = run_experiment(cfg);

  cfg.score = ScoreKind::naive;
  cfg.learner = LearnerKind::forest;
  cfg.forest = slow_forest;
  report.naive_slow = run_experiment(cfg);

  cfg.learner = LearnerKind::truth;
  report.naive_truth = run_experiment(cfg);
  return report;
}

void write_nonortho_report(const NonOrthoReport& report, std::ostream& out) {
  auto line = [&](const char* label, const AggregateReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-28s bias %+.4f  n*post_var %.3f  coverage %.2f%%\n", label,
                  r.avg_post_mean - report.theta0, r.avg_post_var_times_n, r.coverage_pct);
    out << buf;
  };
  line("orthogonal score", report.orthogonal);
  line("naive score, slow nuisance", report.naive_slow);
  line("naive score, true nuisance", report.naive_truth);
}

}  // namespace orthoboot
