#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "winfree/integrator.hpp"
#include "winfree/quadrature.hpp"
#include "winfree/theory.hpp"

using namespace winfree;
using std::numbers::pi;

namespace {

// Reference values from tests/oracles/oracle.py (mpmath, 40 digits).
constexpr double kStar0 = 0.76980035891950101935;
constexpr double kD03 = 0.0083585261328829080098;
constexpr double kAlpha0001 = 0.0036026177947443072325;

struct Coefficient {
  double b0, a1, p1, a2, p2;
  double operator()(double s) const {
    return b0 + a1 * std::cos(s + p1) + a2 * std::sin(2 * s + p2);
  }
};

Coefficient random_coefficient(std::mt19937_64& gen) {
  return {0.1 + 1.4 * uniform_unit(gen), 1.0 * uniform_unit(gen), 2 * pi * uniform_unit(gen),
          0.6 * uniform_unit(gen), 2 * pi * uniform_unit(gen)};
}

// RK4 on y' = alpha - b(s) y from y(0) = 1 over `periods` periods, recording the last one.
std::vector<double> forward_last_period(double alpha, const Coefficient& b, std::size_t grid,
                                        int periods) {
  const double h = 2 * pi / grid;
  auto f = [&](double s, double y) { return alpha - b(s) * y; };
  double y = 1.0;
  std::vector<double> last(grid + 1);
  for (int p = 0; p < periods; ++p) {
    if (p == periods - 1) last[0] = y;
    for (std::size_t k = 0; k < grid; ++k) {
      const double s = h * k;
      const double k1 = f(s, y);
      const double k2 = f(s + h / 2, y + h / 2 * k1);
      const double k3 = f(s + h / 2, y + h / 2 * k2);
      const double k4 = f(s + h, y + h * k3);
      y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      if (p == periods - 1) last[k + 1] = y;
    }
  }
  return last;
}

double five_point_residual(const DispersionCurve& c, const Coefficient& b) {
  const std::size_t n = c.s.size() - 1;
  const double h = 2 * pi / n;
  auto at = [&](long k) { return c.delta[static_cast<std::size_t>(((k % long(n)) + long(n)) % long(n))]; };
  double worst = 0.0;
  for (long k = 0; k < long(n); ++k) {
    const double d = (at(k - 2) - 8 * at(k - 1) + 8 * at(k + 1) - at(k + 2)) / (12 * h);
    worst = std::max(worst, std::abs(d - (c.alpha - b(c.s[k]) * c.delta[k])));
  }
  return worst;
}

}  // namespace

TEST_CASE("critical coupling values") {
  CHECK(kappa_star(simplified_model(0.0)).value() == doctest::Approx(kStar0).epsilon(1e-12));
  CHECK(std::abs(kappa_star(simplified_model(0.0)).value() - 4 / (3 * std::sqrt(3.0))) < 1e-6);
  CHECK(std::abs(kappa_star(simplified_model(pi / 2 - 0.5)).value() - 1.936) < 2e-3);
  CHECK(std::abs(kappa_star(simplified_model(pi / 2 - 0.25)).value() - 2.694) < 2e-3);
  CHECK(kappa_star(simplified_model(pi / 2)).value() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(kappa_star(simplified_model(0.0)).argmax() - pi / 3) < 1e-7);
}

TEST_CASE("critical coupling is minimal at beta = 0") {
  const double k0 = kappa_star(simplified_model(0.0)).value();
  for (int k = 0; k <= 90; ++k) {
    const auto ks = kappa_star(simplified_model(pi * k / 90));
    CHECK(ks.value() >= k0 * (1 - 1e-12));
  }
}

TEST_CASE("unbounded critical coupling") {
  auto p = [](double x) { return 1 + std::cos(x); };
  auto dp = [](double x) { return -std::sin(x); };
  auto r = [](double x) { return std::cos(x) - 1; };
  auto dr = [](double x) { return -std::sin(x); };
  auto ddr = [](double x) { return -std::cos(x); };
  const ModelSpec model(p, dp, r, dr, ddr, {2, 1, 2, 1, 1});
  const auto ks = kappa_star(model);
  CHECK(ks.is_unbounded());
  CHECK_THROWS_AS(ks.value(), std::logic_error);
  CHECK(ks.ratio(100.0) == 0.0);
  CHECK(ks.admits(1e9));

  const auto fin = CriticalCoupling::finite(2.0, 1.0);
  CHECK(fin.ratio(0.5) == 0.25);
  CHECK(fin.admits(1.999));
  CHECK_FALSE(fin.admits(2.0));
  CHECK_THROWS_AS(CriticalCoupling::finite(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("theory constants") {
  for (double beta : {0.0, 1.0, pi / 2, 3.0}) {
    const auto c = TheoryConstants::from(simplified_model(beta));
    CHECK(c.c == 3.0);
    CHECK(c.c_tilde == 3.0);
  }
}

TEST_CASE("synchronization integral values") {
  const auto m0 = simplified_model(0.0);
  CHECK(h_integral(m0, 0.0) == doctest::Approx(pi).epsilon(1e-14));
  const std::pair<double, double> golden[] = {{0.1, 3.1694375933230359998},
                                              {0.3, 3.4215916329360267917},
                                              {0.5, 4.1720809480107152895},
                                              {0.6, 5.0952312292623104701},
                                              {0.75, 14.510394913873742805}};
  for (auto [kappa, h] : golden) {
    const double value = h_integral(m0, kappa);
    CHECK(value > pi / 3);
    CHECK(value == doctest::Approx(h).epsilon(1e-11));
  }
  const auto mh = simplified_model(pi / 2);
  for (double kappa : {0.0, 0.5, 1.5, 3.0, 3.9})
    CHECK(std::abs(h_integral(mh, kappa)) < 1e-9);
  CHECK_THROWS_AS(h_integral(m0, 0.8), std::domain_error);
  CHECK_THROWS_AS(h_integral(m0, -0.1), std::domain_error);
}

TEST_CASE("synchronization integral antisymmetry") {
  for (int k = 0; k < 50; ++k) {
    const double beta = pi * k / 49;
    const auto a = simplified_model(beta);
    const auto b = simplified_model(pi - beta);
    const double cap = std::min(kappa_star(a).value(), kappa_star(b).value());
    for (double frac : {0.25, 0.5, 0.9}) {
      const double kappa = frac * cap;
      CHECK(std::abs(h_integral(a, kappa) + h_integral(b, kappa)) < 1e-9);
    }
  }
}

TEST_CASE("coefficient beta_kappa") {
  const auto m = simplified_model(0.0);
  for (double s : {0.0, 1.0, 2.5, 5.0}) CHECK(beta_kappa(m, 0.0, s) == 0.0);
  CHECK(std::abs(beta_kappa(m, 0.5, pi / 2)) < 1e-15);
  const double integral =
      quad::checked_simpson([&](double s) { return beta_kappa(m, 0.5, s); }, 0.0, 2 * pi);
  CHECK(std::abs(integral - 0.5 * h_integral(m, 0.5)) < 1e-9);
  CHECK_THROWS_AS(beta_kappa(m, 2.0, pi / 3), std::domain_error);
}

TEST_CASE("periodic affine solution with constant coefficient") {
  const auto c = periodic_affine_solution(0.7, [](double) { return 0.35; });
  for (double d : c.delta) CHECK(std::abs(d - 2.0) < 1e-9);
  CHECK(std::abs(c(1.234) - 2.0) < 1e-9);
  CHECK(c.beta_negative_integral == 0.0);
  CHECK(c.beta_integral() == doctest::Approx(0.7 * pi).epsilon(1e-14));
}

TEST_CASE("periodic affine solution rejects bad input") {
  CHECK_THROWS_AS(periodic_affine_solution(0.0, [](double) { return 1.0; }), std::domain_error);
  CHECK_THROWS_AS(periodic_affine_solution(1.0, [](double s) { return std::sin(s); }),
                  std::domain_error);
  CHECK_THROWS_AS(periodic_affine_solution(1.0, [](double s) { return -0.1 + std::cos(s); }),
                  std::domain_error);
  CHECK_THROWS_AS(periodic_affine_solution(1.0, [](double) { return 1.0; }, 7),
                  std::invalid_argument);
}

TEST_CASE("periodic affine solution against independent oracles") {
  std::mt19937_64 gen(515);
  for (int trial = 0; trial < 20; ++trial) {
    const double alpha = 1e-3 + 2.0 * uniform_unit(gen);
    const auto b = random_coefficient(gen);
    const auto c = periodic_affine_solution(alpha, b);
    CAPTURE(trial);
    CHECK(std::abs(c.delta.front() - c.delta.back()) <= 1e-10);
    CHECK(c.min() > 0.0);
    CHECK(five_point_residual(c, b) <= 1e-6);
    const auto ref = forward_last_period(alpha, b, c.s.size() - 1, 50);
    double gap = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) gap = std::max(gap, std::abs(ref[k] - c.delta[k]));
    CHECK(gap <= 1e-8);

    double neg = 0.0;
    const int m = 200000;
    for (int k = 0; k < m; ++k) neg += std::max(0.0, -b(2 * pi * (k + 0.5) / m)) * 2 * pi / m;
    CHECK(c.beta_negative_integral == doctest::Approx(neg).epsilon(1e-8));
    const double bound = alpha * 2 * pi * std::exp(neg) / (1 - std::exp(-2 * pi * b.b0));
    CHECK(c.max() <= bound);
    CHECK(c.upper_bound() == doctest::Approx(bound).epsilon(1e-8));
  }
}

TEST_CASE("curve interpolation is periodic") {
  const auto c = periodic_affine_solution(0.5, [](double s) { return 0.4 + std::cos(s); }, 256);
  for (double s : {0.1, 1.7, 4.4}) {
    CHECK(c(s + 2 * pi) == doctest::Approx(c(s)).epsilon(1e-12));
    CHECK(c(s - 4 * pi) == doctest::Approx(c(s)).epsilon(1e-12));
  }
  CHECK(c(c.s[17]) == doctest::Approx(c.delta[17]).epsilon(1e-14));
  const double mid = 0.5 * (c.s[40] + c.s[41]);
  CHECK(c(mid) == doctest::Approx(0.5 * (c.delta[40] + c.delta[41])).epsilon(1e-14));
}

TEST_CASE("alpha term") {
  const auto consts = TheoryConstants::from(simplified_model(0.0));
  const auto ks = kappa_star(simplified_model(0.0));
  CHECK(alpha_term(0.0, 0.3, 0.0, consts, ks) == 0.0);
  double prev = 0.0;
  for (double g : {1e-6, 1e-4, 1e-3, 1e-2, 0.1}) {
    const double a = alpha_term(g, 0.3, 0.01, consts, ks);
    CHECK(a > prev);
    prev = a;
  }
  CHECK(alpha_term(0.001, 0.3, kD03, consts, ks) == doctest::Approx(kAlpha0001).epsilon(1e-12));
  CHECK_THROWS_AS(alpha_term(0.7, 0.3, 0.01, consts, ks), std::domain_error);
}

TEST_CASE("capacity and gain") {
  const auto m = simplified_model(0.0);
  const auto consts = TheoryConstants::from(m);
  const auto ks = kappa_star(m);
  const std::pair<double, double> golden[] = {
      {0.1, 0.41410913013245247622}, {0.2, 0.34936583598022327276},
      {0.3, 0.29854176335432129074}, {0.4, 0.25712554837863875591},
      {0.5, 0.2220193617520783332},  {0.6, 0.19074492890581767692},
      {0.7, 0.16077976809761261623}};
  for (auto [kappa, l] : golden) {
    const double gain = gain_L(m, kappa);
    CHECK(gain > 0.0);
    CHECK(gain == doctest::Approx(l).epsilon(1e-11));
    const double d = capacity_D(kappa, consts, ks, gain);
    CHECK(d > 0.0);
    CHECK(d <= 1.0);
  }
  CHECK(capacity_D(0.3, consts, ks, gain_L(m, 0.3)) == doctest::Approx(kD03).epsilon(1e-12));
  CHECK(capacity_D(0.3, consts, ks, 1e9) == 1.0);
  const double d_mid = capacity_D(0.5, consts, ks, gain_L(m, 0.5));
  const double near = ks.value() * (1 - 1e-3);
  CHECK(capacity_D(near, consts, ks, gain_L(m, near)) < d_mid);
  CHECK(capacity_D(ks.value() * (1 - 1e-9), consts, ks, 0.2) < 1e-15);
  CHECK_THROWS_AS(capacity_D(0.0, consts, ks, 0.3), std::domain_error);
  CHECK_THROWS_AS(capacity_D(0.8, consts, ks, 0.3), std::domain_error);
  CHECK_THROWS_AS(gain_L(m, 0.8), std::domain_error);
}

TEST_CASE("gain fails where the synchronization hypothesis fails") {
  const auto mirror = simplified_model(2.5);
  const double cap = kappa_star(mirror).value();
  for (double frac : {0.1, 0.5, 0.9}) {
    CHECK_THROWS_AS(gain_L(simplified_model(pi / 2), 4.0 * frac), H3Failure);
    CHECK_THROWS_AS(gain_L(mirror, cap * frac), H3Failure);
  }
  try {
    gain_L(simplified_model(2.5), 0.5);
  } catch (const H3Failure& e) {
    CHECK(e.integral() < 0.0);
  }
}

TEST_CASE("domain certificate examples") {
  const auto m = simplified_model(0.0);
  const auto in = certify_domain(m, 1e-9, 0.3);
  CHECK(in.in_U);
  CHECK(in.condition8);
  CHECK(in.gamma_below_bound);
  REQUIRE(in.curve.has_value());
  CHECK(*in.max_delta() < *in.capacity);
  // the displayed bound of the periodic solution equals alpha / (kappa L)
  CHECK(in.curve->upper_bound() ==
        doctest::Approx(*in.alpha / (0.3 * *in.gain)).epsilon(1e-12));
  CHECK(*in.max_delta() <= in.curve->upper_bound());

  const auto out = certify_domain(m, 0.5, 0.3);
  CHECK_FALSE(out.in_U);
  CHECK_FALSE(out.curve.has_value());

  const auto above = certify_domain(m, 1e-6, 0.9);
  CHECK_FALSE(above.below_kstar);
  CHECK_FALSE(above.in_U);
  CHECK_FALSE(above.gain.has_value());

  CHECK_THROWS_AS(certify_domain(simplified_model(pi / 2), 1e-6, 0.5), H3Failure);
  CHECK_THROWS_AS(certify_domain(m, 0.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(certify_domain(m, 1e-6, 0.0), std::invalid_argument);

  const auto j = to_json(in);
  CHECK(j["in_U"] == true);
  CHECK(j["kappa"] == 0.3);
}

TEST_CASE("certificate invariants over a grid") {
  const std::vector<double> betas{0.0, 0.5, 1.0};
  for (double beta : betas) {
    const auto m = simplified_model(beta);
    const auto ks = kappa_star(m);
    std::size_t certified = 0;
    for (int i = 0; i < 8; ++i) {
      for (int j = 1; j <= 8; ++j) {
        const double gamma = std::pow(10.0, -9.0 + i);
        const double kappa = ks.value() * j / 9.0;
        const auto c = certify_domain(m, gamma, kappa, ks);
        if (!c.in_U) continue;
        ++certified;
        CHECK(c.gamma < c.kappa * *c.capacity * *c.capacity);
        CHECK(c.kappa < ks.value());
        CHECK(1 - c.gamma - 3.0 * c.kappa * *c.capacity - c.kappa / ks.value() > 0.0);
        CHECK(*c.max_delta() < *c.capacity);
        CHECK(*c.max_delta() <= c.curve->upper_bound());
      }
    }
    CHECK(certified > 0);
  }
}

TEST_CASE("closure of the certified region touches gamma = 0") {
  const auto m = simplified_model(0.0);
  const auto ks = kappa_star(m);
  for (int j = 1; j <= 7; ++j) {
    const double kappa = ks.value() * j / 8.0;
    CHECK(certify_domain(m, 1e-12, kappa, ks).in_U);
  }
}

TEST_CASE("invariant set membership") {
  const auto m = simplified_model(0.0);
  const auto cert = certify_domain(m, 1e-6, 0.3);
  REQUIRE(cert.in_U);
  const double top = *cert.max_delta();
  CHECK(in_invariant_set(std::vector<double>(5, 1.0), cert));
  CHECK_FALSE(in_invariant_set(std::vector<double>{0.0, top + 0.1}, cert));
  const double mid = (*cert.curve)(0.0);
  CHECK(in_invariant_set(std::vector<double>{-0.4 * mid, 0.4 * mid}, cert));
  CHECK_THROWS_AS(in_invariant_set(std::vector<double>{0.0}, certify_domain(m, 0.5, 0.3)),
                  std::invalid_argument);
}

TEST_CASE("certified set is invariant along the flow") {
  const auto m = simplified_model(0.0);
  const double gamma = 1e-6, kappa = 0.3;
  const auto cert = certify_domain(m, gamma, kappa);
  REQUIRE(cert.in_U);
  const std::size_t n = 8;
  const EnsembleParams params(kappa, gamma, make_frequencies(n, gamma, FrequencyScheme::equidistant));
  std::mt19937_64 gen(8);
  const double mu0 = 2 * pi * uniform_unit(gen);
  const double spread = 0.9 * (*cert.curve)(mu0);
  std::vector<double> x(n);
  for (auto& xi : x) xi = mu0 + spread * (uniform_unit(gen) - 0.5);
  REQUIRE(in_invariant_set(x, cert));
  double prev_mu = mean_dispersion(x).mean;
  bool inside = true, increasing = true;
  integrate_observed({0.0, x}, params, m, {}, 200.0, [&](const EnsembleState& s) {
    inside = inside && in_invariant_set(s.x, cert);
    const double mu = mean_dispersion(s.x).mean;
    if (s.t > 0.0) increasing = increasing && mu > prev_mu;
    prev_mu = mu;
  });
  CHECK(inside);
  CHECK(increasing);
}
