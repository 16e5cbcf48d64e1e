#include "orthoboot/dgp.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "orthoboot/error.hpp"

namespace orthoboot {

namespace {

double expit(double v) {
  if (v >= 0.0) {
    return 1.0 / (1.0 + std::exp(-v));
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

Eigen::MatrixXd covariance_factor(std::size_t q) {
  const auto sigma = plm_covariance(q);
  Eigen::MatrixXd s(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sigma(i, j);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw InternalError("simulate_plm: covariance is not positive definite for q=" + std::to_string(q));
  }
  return llt.matrixL();
}

}  // namespace

void PlmConfig::validate() const {
  if (n == 0) throw InvalidArgument("PlmConfig: n must be at least 1");
  if (q < 5) throw InvalidArgument("PlmConfig: q must be at least 5");
}

CovariateMatrix plm_covariance(std::size_t q) {
  CovariateMatrix sigma(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      const double lag = i > j ? static_cast<double>(i - j) : static_cast<double>(j - i);
      sigma(i, j) = std::pow(0.8, lag) / 4.0;
    }
  }
  return sigma;
}

double plm_g0(std::span<const double> x) {
  return x[0] + std::sin(x[1] + x[2]) + std::cos(x[2]) + std::abs(x[3]) + x[x.size() - 1];
}

double plm_e0(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return 0.5 * expit(s) + 0.2;
}

Dataset simulate_plm(const PlmConfig& cfg, RandomStream& rng) {
  cfg.validate();
  const std::size_t n = cfg.n;
  const std::size_t q = cfg.q;
  const Eigen::MatrixXd lower = covariance_factor(q);

  Dataset data;
  data.y.resize(n);
  data.z.resize(n);
  data.x = CovariateMatrix(n, q);
  GroundTruth truth;
  truth.theta0 = cfg.theta0;
  truth.e0.resize(n);
  truth.g0.resize(n);
  truth.ky0.resize(n);

  Eigen::VectorXd eps(static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : eps) v = rng.normal();
    const Eigen::VectorXd draw = lower * eps;
    auto row = data.x.row(i);
    for (std::size_t j = 0; j < q; ++j) row[j] = draw(static_cast<Eigen::Index>(j));

    const double e0 = plm_e0(row);
    const double g0 = plm_g0(row);
    const double z = rng.bernoulli(e0) ? 1.0 : 0.0;
    const double u = rng.normal();
    data.z[i] = z;
    data.y[i] = cfg.theta0 * z + g0 + u;
    truth.e0[i] = e0;
    truth.g0[i] = g0;
    truth.ky0[i] = cfg.theta0 * e0 + g0;
  }
  data.truth = std::move(truth);
  return data;
}

Dataset simulate_kernel_model(std::size_t n, RandomStream& rng, double theta0) {
  if (n == 0) throw InvalidArgument("simulate_kernel_model: n must be at least 1");
  Dataset data;
  data.y.resize(n);
  data.z.resize(n);
  data.x = CovariateMatrix(n, 1);
  GroundTruth truth;
  truth.theta0 = theta0;
  truth.e0.resize(n);
  truth.g0.resize(n);
  truth.ky0.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    const double u = rng.normal();
    const double v = rng.normal();
    const double z = std::sin(x) + v;
    data.x(i, 0) = x;
    data.z[i] = z;
    data.y[i] = theta0 * z + x + u;
    truth.e0[i] = std::sin(x);
    truth.g0[i] = x;
    truth.ky0[i] = theta0 * std::sin(x) + x;
  }
  data.truth = std::move(truth);
  return data;
}

Predictor plm_true_e() {
  return Predictor::from_function([](std::span<const double> x) { return plm_e0(x); });
}

Predictor plm_true_ky(double theta0) {
  return Predictor::from_function(
      [theta0](std::span<const double> x) { return theta0 * plm_e0(x) + plm_g0(x); });
}

Predictor plm_true_mu(double theta0, double arm) {
  return Predictor::from_function(
      [theta0, arm](std::span<const double> x) { return theta0 * arm + plm_g0(x); });
}

Predictor kernel_true_e() {
  return Predictor::from_function([](std::span<const double> x) { return std::sin(x[0]); });
}

Predictor kernel_true_ky(double theta0) {
  return Predictor::from_function(
      [theta0](std::span<const double> x) { return theta0 * std::sin(x[0]) + x[0]; });
}

}  // namespace orthoboot
