#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "orthoboot/dgp.hpp"
#include "orthoboot/error.hpp"
#include "orthoboot/nuisance.hpp"

using namespace orthoboot;

namespace {

double mse(const Predictor& p, const Dataset& d, const std::vector<double>& target) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double r = p.predict(d.x.row(i)) - target[i];
    s += r * r;
  }
  return s / static_cast<double>(d.size());
}

CovariateMatrix column(const std::vector<double>& v) {
  CovariateMatrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

}  // namespace

TEST_CASE("forest config arithmetic") {
  ForestConfig cfg;
  CHECK(cfg.subsample_size(500) == 21);  // floor(500^0.49)
  CHECK(cfg.features_per_split(5) == 2);
  CHECK(cfg.features_per_split(20) == 7);
  cfg.max_features = ForestConfig::kAllFeatures;
  CHECK(cfg.features_per_split(20) == 20);
  cfg.subsample_exponent = 1.0;
  CHECK(cfg.subsample_size(123) == 123);
  cfg.subsample_exponent = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.num_trees = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("forest on a constant target predicts the constant") {
  RandomStream rng(1);
  auto d = simulate_plm({.n = 200, .q = 5}, rng);
  std::vector<double> y(d.size(), 4.25);
  auto f = fit_forest(d.x, y, {.num_trees = 20, .seed = 3});
  for (std::size_t i = 0; i < 20; ++i) CHECK(f.predict(d.x.row(i)) == doctest::Approx(4.25).epsilon(1e-14));
}

TEST_CASE("single full-sample tree with one leaf predicts the mean") {
  RandomStream rng(2);
  auto d = simulate_plm({.n = 60, .q = 5}, rng);
  ForestConfig cfg{.num_trees = 1, .subsample_exponent = 1.0, .min_leaf = 60};
  auto f = fit_forest(d.x, d.y, cfg);
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / 60.0;
  CHECK(f.predict(d.x.row(7)) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("forest predictions stay within the target range") {
  RandomStream rng(4);
  auto d = simulate_plm({.n = 300, .q = 6}, rng);
  auto f = fit_forest(d.x, d.y, {.num_trees = 50, .seed = 9});
  const auto [lo, hi] = std::minmax_element(d.y.begin(), d.y.end());
  RandomStream probe(5);
  auto test = simulate_plm({.n = 200, .q = 6}, probe);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double p = f.predict(test.x.row(i));
    CHECK(p >= *lo);
    CHECK(p <= *hi);
  }
}

TEST_CASE("forest beats the mean on held-out data") {
  RandomStream rng(6);
  auto train = simulate_plm({.n = 500, .q = 5}, rng);
  auto test = simulate_plm({.n = 2000, .q = 5}, rng);
  auto f = fit_forest(train.x, train.y, {.seed = 1});
  const double mean = std::accumulate(train.y.begin(), train.y.end(), 0.0) / 500.0;
  CHECK(mse(f, test, test.y) < mse(Predictor::constant(mean), test, test.y));
}

TEST_CASE("forest is reproducible and thread invariant") {
  RandomStream rng(7);
  auto d = simulate_plm({.n = 400, .q = 5}, rng);
  auto a = fit_forest(d.x, d.z, {.num_trees = 40, .seed = 11, .threads = 1});
  auto b = fit_forest(d.x, d.z, {.num_trees = 40, .seed = 11, .threads = 4});
  auto c = fit_forest(d.x, d.z, {.num_trees = 40, .seed = 12, .threads = 1});
  bool differs = false;
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(a.predict(d.x.row(i)) == b.predict(d.x.row(i)));
    differs = differs || a.predict(d.x.row(i)) != c.predict(d.x.row(i));
  }
  CHECK(differs);
}

TEST_CASE("propensity error shrinks with n") {
  std::vector<double> errs;
  RandomStream probe_rng(100);
  auto probe = simulate_plm({.n = 2000, .q = 5}, probe_rng);
  for (std::size_t n : {250u, 1000u, 4000u}) {
    double total = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
      RandomStream rng(mix_seed(n, k));
      auto d = simulate_plm({.n = n, .q = 5}, rng);
      auto f = fit_forest(d.x, d.z, {.num_trees = 100, .seed = k});
      total += mse(f, probe, probe.truth->e0);
    }
    errs.push_back(total / 20.0);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
}

TEST_CASE("forest input validation") {
  CovariateMatrix x(1, 2);
  std::vector<double> y{1.0};
  CHECK_THROWS_AS(fit_forest(x, y, {}), InvalidArgument);
  CovariateMatrix x2(3, 2);
  std::vector<double> y2{1.0, NAN, 2.0};
  CHECK_THROWS_AS(fit_forest(x2, y2, {}), InvalidArgument);
  std::vector<double> y3{1.0, 2.0};
  CHECK_THROWS_AS(fit_forest(x2, y3, {}), InvalidArgument);
}

TEST_CASE("silverman bandwidth") {
  std::vector<double> x{-1.0, 1.0};
  // sd with 1/(n-1) is sqrt(2)
  CHECK(silverman_bandwidth(x) == doctest::Approx(1.06 * std::sqrt(2.0) * std::pow(2.0, -0.2)));
}

TEST_CASE("kernel smoother limits") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  std::vector<double> y{1.0, 5.0, -2.0, 8.0};
  auto wide = fit_kernel(x, y, 1e6);
  const double q[] = {1.7};
  CHECK(wide.predict(q) == doctest::Approx(3.0).epsilon(1e-6));

  std::vector<double> flat(4, -0.5);
  auto k = fit_kernel(x, flat);
  CHECK(k.predict(q) == doctest::Approx(-0.5));

  std::vector<double> x2{0.0, 1.0}, y2{10.0, 20.0};
  auto narrow = fit_kernel(x2, y2, 1e-3);
  const double far[] = {100.0};
  CHECK(narrow.predict(far) == 20.0);
  const double near0[] = {-50.0};
  CHECK(narrow.predict(near0) == 10.0);

  CHECK_THROWS_AS(fit_kernel(x, y, 0.0), InvalidArgument);
  CHECK_THROWS_AS(fit_kernel(x, y, -1.0), InvalidArgument);
}

TEST_CASE("kernel smoother recovers sin") {
  RandomStream rng(12);
  auto d = simulate_kernel_model(1000, rng);
  std::vector<double> x(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) x[i] = d.x(i, 0);
  auto k = fit_kernel(x, d.z);
  double s = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::abs(x[i]) > 2.0) continue;
    const double r = k.predict(d.x.row(i)) - std::sin(x[i]);
    s += r * r;
    ++count;
  }
  CHECK(s / count < 0.02);
}

TEST_CASE("propensity clamping") {
  auto p = Predictor::from_function([](std::span<const double> x) { return x[0]; });
  auto c = clamp_propensity(p, {0.05});
  const double lo[] = {-1.0}, mid[] = {0.3}, hi[] = {0.999};
  CHECK(c.predict(lo) == 0.05);
  CHECK(c.predict(mid) == 0.3);
  CHECK(c.predict(hi) == 0.95);
  CHECK_THROWS_AS(clamp_propensity(p, {0.0}), InvalidArgument);
  CHECK_THROWS_AS(clamp_propensity(p, {0.5}), InvalidArgument);
}

TEST_CASE("predict_rows matches predict") {
  auto m = column({0.0, 1.0, 2.0});
  auto p = Predictor::from_function([](std::span<const double> x) { return 2.0 * x[0] + 1.0; });
  CHECK(p.predict_rows(m) == std::vector<double>{1.0, 3.0, 5.0});
  Predictor empty;
  CHECK_FALSE(static_cast<bool>(empty));
}
