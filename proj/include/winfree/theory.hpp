#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "winfree/model.hpp"

namespace winfree {

/// The averaged stability integral int_0^{2pi} beta_kappa is not positive.
class H3Failure : public std::domain_error {
 public:
  H3Failure(double integral, const std::string& what)
      : std::domain_error(what), integral_(integral) {}
  double integral() const { return integral_; }

 private:
  double integral_;
};

/// Locking bifurcation parameter kappa_* = 1 / max_x P(x) R(x), or unbounded
/// when P R never becomes positive.
class CriticalCoupling {
 public:
  static CriticalCoupling unbounded() { return CriticalCoupling(); }
  static CriticalCoupling finite(double value, double argmax);

  bool is_unbounded() const { return !value_.has_value(); }
  /// Throws std::logic_error when unbounded.
  double value() const;
  /// Location of max P R (meaningless when unbounded).
  double argmax() const { return argmax_; }
  /// kappa / kappa_*, zero when unbounded.
  double ratio(double kappa) const;
  /// kappa < kappa_*.
  bool admits(double kappa) const;

 private:
  CriticalCoupling() = default;
  std::optional<double> value_;
  double argmax_ = 0.0;
};

CriticalCoupling kappa_star(const ModelSpec& model);

/// C = |P| |R''| + |P'| |R'|, C~ = |P'| |R| + |P| |R'| (sup norms).
struct TheoryConstants {
  double c = 0.0;
  double c_tilde = 0.0;

  static TheoryConstants from(const ModelSpec& model);
};

/// P(s) R'(s) / (1 - kappa P(s) R(s)). Throws std::domain_error where the
/// denominator is not positive.
double h_integrand(const ModelSpec& model, double kappa, double s);

/// int_0^{2pi} P R' / (1 - kappa P R) ds, composite Simpson on 4096 panels
/// with a halving check. Requires 0 <= kappa < kappa_*.
double h_integral(const ModelSpec& model, double kappa);
double h_integral(const ModelSpec& model, double kappa,
                  const CriticalCoupling& kstar);

/// kappa P(s) R'(s) / (1 - kappa P(s) R(s)).
double beta_kappa(const ModelSpec& model, double kappa, double s);

/// Positive 2*pi-periodic solution of Delta' = alpha - beta(s) Delta sampled
/// on nodes s_k = 2*pi*k/n, k = 0..n (the last node closes the period).
struct DispersionCurve {
  double alpha = 0.0;
  std::vector<double> s;
  std::vector<double> beta;
  std::vector<double> cumulative;  // B(s_k) = int_0^{s_k} beta
  std::vector<double> delta;
  double beta_negative_integral = 0.0;  // int_0^{2pi} max(0, -beta)

  double beta_integral() const { return cumulative.back(); }
  /// Periodic linear interpolation of Delta.
  double operator()(double phase) const;
  double max() const;
  double min() const;
  /// alpha 2pi exp(int beta^-) / (1 - exp(-int beta)).
  double upper_bound() const;
};

/// Requires alpha > 0 and int_0^{2pi} beta > 0 (std::domain_error
/// otherwise). Cost is O(grid^2).
DispersionCurve periodic_affine_solution(double alpha,
                                         const std::function<double(double)>& beta_fn,
                                         std::size_t grid = 2048);

/// Source term of the dispersion comparison equation. Throws
/// std::domain_error unless 1 - gamma - C~ kappa D - kappa/kappa_* > 0.
double alpha_term(double gamma, double kappa, double capacity,
                  const TheoryConstants& constants, const CriticalCoupling& kstar);

/// min(1, L / (2(2+C)/(1-q) + 2 C~ (1 + C~) kappa / (1-q)^2)), q = kappa/kappa_*.
double capacity_D(double kappa, const TheoryConstants& constants,
                  const CriticalCoupling& kstar, double gain);

/// (1 - exp(-int beta_kappa)) / (2 pi kappa exp(int beta_kappa^-)).
/// Throws H3Failure when int beta_kappa is not certifiably positive.
double gain_L(const ModelSpec& model, double kappa);
double gain_L(const ModelSpec& model, double kappa, const CriticalCoupling& kstar);

struct DomainCertificate {
  double gamma = 0.0;
  double kappa = 0.0;
  CriticalCoupling kstar = CriticalCoupling::unbounded();
  TheoryConstants constants;
  std::optional<double> gain;      // L(kappa)
  std::optional<double> capacity;  // D(kappa)
  std::optional<double> alpha;     // alpha(gamma, kappa, D(kappa))
  bool below_kstar = false;
  bool gamma_below_bound = false;  // gamma < kappa D^2
  bool condition8 = false;
  bool in_U = false;
  std::optional<DispersionCurve> curve;  // built when the formula test passes

  std::optional<double> max_delta() const;
};

/// Evaluates kappa_*, C, C~, L, D, the drift condition 1 - gamma - C~ kappa D - kappa/kappa_* > 0
/// and, when (gamma, kappa) passes the U test, the dispersion curve. Throws H3Failure from gain_L.
DomainCertificate certify_domain(const ModelSpec& model, double gamma, double kappa);
DomainCertificate certify_domain(const ModelSpec& model, double gamma, double kappa,
                                 const CriticalCoupling& kstar);

/// max_{i,j} |x_i - x_j| < Delta(mean(x) mod 2pi).
bool in_invariant_set(std::span<const double> x, const DomainCertificate& certificate);

nlohmann::json to_json(const DomainCertificate& certificate);

}  // namespace winfree
