#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "winfree/model.hpp"
#include "winfree/observables.hpp"

using namespace winfree;
using std::numbers::pi;

TEST_CASE("mean and dispersion examples") {
  const std::vector<double> x{1, 2, 3};
  const auto md = mean_dispersion(x);
  CHECK(md.mean == 2.0);
  CHECK(md.dispersion == 2.0);
  CHECK(mean_dispersion(std::vector<double>(5, 0.3)).dispersion == 0.0);
  CHECK(mean_dispersion(std::vector<double>{0, 2 * pi, 4 * pi}).dispersion ==
        doctest::Approx(4 * pi).epsilon(1e-15));
  CHECK_THROWS_AS(mean_dispersion(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("coherence examples") {
  CHECK(order_r(std::vector<double>(7, 1.3)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(order_r(std::vector<double>{0, pi / 2, pi, 3 * pi / 2})) < 1e-15);
  CHECK(order_r(std::vector<double>{0, pi / 3}) == doctest::Approx(std::cos(pi / 6)).epsilon(1e-15));
}

TEST_CASE("deviation examples") {
  CHECK(order_d(std::vector<double>{1, 2, 3}) == 1.0);
  CHECK(order_d(std::vector<double>(4, -2.5)) == 0.0);
}

TEST_CASE("verdict boundary") {
  CHECK(sync_verdict(0.0) == Verdict::synchronized);
  CHECK(sync_verdict(3 * pi) == Verdict::desynchronized);
  CHECK(sync_verdict(std::nextafter(3 * pi, 0.0)) == Verdict::synchronized);
  CHECK(sync_verdict(1.0, 0.5) == Verdict::desynchronized);
  CHECK_THROWS_AS(sync_verdict(1.0, 0.0), std::invalid_argument);
  CHECK(to_string(Verdict::synchronized) == "synchronized");
  CHECK(to_string(Verdict::desynchronized) == "desynchronized");
}

TEST_CASE("observable bounds and invariances on random vectors") {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 40;
    std::vector<double> x(n);
    const double scale = std::pow(10.0, 4.0 * uniform_unit(gen) - 2.0);
    for (auto& xi : x) xi = scale * (uniform_unit(gen) - 0.5);
    const auto o = observe(x);
    CHECK(o.coherence >= 0.0);
    CHECK(o.coherence <= 1.0);
    CHECK(o.dispersion >= 0.0);
    CHECK(o.deviation >= 0.0);
    CHECK(o.deviation <= o.dispersion * (1 + 1e-14));
    CHECK(o.deviation >= o.dispersion / 2 * (1 - 1e-14));

    const double c = 50.0 * (uniform_unit(gen) - 0.5);
    auto shifted = x;
    for (auto& xi : shifted) xi += c;
    const auto os = observe(shifted);
    CHECK(os.dispersion == doctest::Approx(o.dispersion).epsilon(1e-12).scale(scale + std::abs(c)));
    CHECK(os.deviation == doctest::Approx(o.deviation).epsilon(1e-12).scale(scale + std::abs(c)));
    CHECK(os.coherence == doctest::Approx(o.coherence).epsilon(1e-12));

    auto lifted = x;
    lifted[gen() % n] += 2 * pi;
    CHECK(order_r(lifted) == doctest::Approx(o.coherence).epsilon(1e-12));
  }
}

TEST_CASE("dispersion sees lifts that coherence ignores") {
  std::vector<double> x{0.1, 0.2, 0.3};
  const double r = order_r(x);
  const double delta = mean_dispersion(x).dispersion;
  x[1] += 2 * pi;
  CHECK(order_r(x) == doctest::Approx(r).epsilon(1e-14));
  CHECK(mean_dispersion(x).dispersion > delta + 6.0);
}

TEST_CASE("observe agrees with the separate functions") {
  const std::vector<double> x{-1.0, 0.25, 4.0, 2.0};
  const auto o = observe(x);
  CHECK(o.mean == mean_dispersion(x).mean);
  CHECK(o.dispersion == mean_dispersion(x).dispersion);
  CHECK(o.deviation == order_d(x));
  CHECK(o.coherence == order_r(x));
}
