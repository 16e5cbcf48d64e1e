#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "orthoboot/error.hpp"
#include "orthoboot/weights.hpp"

using namespace orthoboot;

namespace {

struct Moments {
  double mean;
  double var;
  double mean_se;
  double var_se;
};

Moments moments(const std::vector<double>& v) {
  const double d = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / d;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double c = (x - mean) * (x - mean);
    m2 += c;
    m4 += c * c;
  }
  m2 /= d;
  m4 /= d;
  return {mean, m2 * d / (d - 1.0), std::sqrt(m2 / d), std::sqrt((m4 - m2 * m2) / d)};
}

}  // namespace

TEST_CASE("degenerate sizes") {
  RandomStream rng(5);
  auto w = draw_dirichlet(1, rng);
  REQUIRE(w.size() == 1);
  CHECK(w[0] == 1.0);
  CHECK(draw_multinomial(1, rng)[0] == 1.0);
  CHECK_THROWS_AS(draw_dirichlet(0, rng), InvalidArgument);
  CHECK_THROWS_AS(draw_multinomial(0, rng), InvalidArgument);
  CHECK_THROWS_AS(equal_weights(0), InvalidArgument);
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(WeightVector({0.5, -0.1, 0.6}, WeightScheme::equal), InvalidArgument);
  CHECK_THROWS_AS(WeightVector({0.5, NAN}, WeightScheme::equal), InvalidArgument);
  WeightVector w({1.0, 1.0, 2.0}, WeightScheme::equal);
  CHECK(w[0] == doctest::Approx(0.25));
  CHECK(w[2] == doctest::Approx(0.5));
}

TEST_CASE("every draw is a probability vector") {
  RandomStream rng(11);
  for (auto scheme : {WeightScheme::dirichlet, WeightScheme::multinomial, WeightScheme::equal}) {
    for (std::size_t n : {1u, 2u, 3u, 17u, 500u}) {
      for (int rep = 0; rep < 20; ++rep) {
        auto w = draw_weights(scheme, n, rng);
        REQUIRE(w.size() == n);
        double sum = 0.0;
        for (double x : w.values()) {
          CHECK(x >= 0.0);
          sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("dirichlet first coordinate has mean 1/n") {
  const std::size_t n = 1000;
  RandomStream rng(2024);
  std::vector<double> w1;
  for (int d = 0; d < 10000; ++d) w1.push_back(draw_dirichlet(n, rng)[0]);
  const auto m = moments(w1);
  CHECK(std::abs(m.mean - 1.0 / n) <= 3.0 * m.mean_se);
}

TEST_CASE("dirichlet coordinates are exchangeable") {
  const std::size_t n = 40;
  RandomStream rng(8);
  std::vector<double> first, middle;
  for (int d = 0; d < 20000; ++d) {
    auto w = draw_dirichlet(n, rng);
    first.push_back(w[0]);
    middle.push_back(w[n / 2]);
  }
  const auto a = moments(first), b = moments(middle);
  CHECK(std::abs(a.mean - b.mean) <= 4.0 * std::hypot(a.mean_se, b.mean_se));
  CHECK(std::abs(a.var - b.var) <= 4.0 * std::hypot(a.var_se, b.var_se));
}

TEST_CASE("dispersion statistic tends to one") {
  RandomStream rng(99);
  for (std::size_t n : {100u, 1000u}) {
    for (auto scheme : {WeightScheme::dirichlet, WeightScheme::multinomial}) {
      double avg = 0.0;
      const int draws = 50;
      for (int d = 0; d < draws; ++d) avg += weight_dispersion(draw_weights(scheme, n, rng).values());
      avg /= draws;
      CHECK(std::abs(avg - 1.0) <= 0.1);
    }
  }
  CHECK(weight_dispersion(equal_weights(10).values()) == doctest::Approx(0.0));
}

TEST_CASE("multinomial weights are multiples of 1/n") {
  RandomStream rng(3);
  for (int d = 0; d < 100; ++d) {
    auto w = draw_multinomial(4, rng);
    for (double x : w.values()) {
      const double k = x * 4.0;
      CHECK(k == doctest::Approx(std::round(k)));
    }
  }
}

TEST_CASE("multinomial count has binomial variance") {
  const std::size_t n = 50;
  RandomStream rng(17);
  std::vector<double> counts;
  for (int d = 0; d < 20000; ++d) counts.push_back(draw_multinomial(n, rng)[0] * n);
  const auto m = moments(counts);
  CHECK(std::abs(m.mean - 1.0) <= 3.0 * m.mean_se);
  CHECK(std::abs(m.var - (1.0 - 1.0 / n)) <= 3.0 * m.var_se);
}

TEST_CASE("scheme names round trip") {
  for (auto s : {WeightScheme::dirichlet, WeightScheme::multinomial, WeightScheme::equal})
    CHECK(parse_weight_scheme(to_string(s)) == s);
  CHECK_THROWS(parse_weight_scheme("poisson"));
}
