#include "winfree/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "winfree/observables.hpp"
#include "winfree/quadrature.hpp"

namespace winfree {

namespace {

constexpr std::size_t kKappaStarGrid = 16384;
constexpr std::size_t kSimpsonPanels = 4096;
constexpr double kSimpsonTol = 1e-9;

// An integral of beta_kappa this close to zero is indistinguishable from the
// quadrature error and does not certify H3.
constexpr double kH3Margin = kSimpsonTol;

void require_below_kstar(double kappa, const CriticalCoupling& kstar,
                         const char* what) {
  if (!(kappa >= 0.0) || !kstar.admits(kappa)) {
    std::ostringstream msg;
    msg << what << ": kappa=" << kappa << " must lie in [0, kappa_*)";
    throw std::domain_error(msg.str());
  }
}

}  // namespace

CriticalCoupling CriticalCoupling::finite(double value, double argmax) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument("CriticalCoupling: value must be positive and finite");
  CriticalCoupling k;
  k.value_ = value;
  k.argmax_ = argmax;
  return k;
}

double CriticalCoupling::value() const {
  if (!value_) throw std::logic_error("CriticalCoupling: kappa_* is unbounded");
  return *value_;
}

double CriticalCoupling::ratio(double kappa) const {
  return value_ ? kappa / *value_ : 0.0;
}

bool CriticalCoupling::admits(double kappa) const {
  return !value_ || kappa < *value_;
}

CriticalCoupling kappa_star(const ModelSpec& model) {
  auto pr = [&model](double x) { return model.p(x) * model.r(x); };
  const auto peak = quad::grid_golden_max(pr, 0.0, kTwoPi, kKappaStarGrid);
  if (!(peak.value > 0.0)) return CriticalCoupling::unbounded();
  return CriticalCoupling::finite(1.0 / peak.value, peak.x);
}

TheoryConstants TheoryConstants::from(const ModelSpec& model) {
  const auto& n = model.sup_norms();
  return {n.p * n.ddr + n.dp * n.dr, n.dp * n.r + n.p * n.dr};
}

double h_integrand(const ModelSpec& model, double kappa, double s) {
  const double p = model.p(s);
  const double denom = 1.0 - kappa * p * model.r(s);
  if (!(denom > 0.0))
    throw std::domain_error("h_integrand: 1 - kappa P R is not positive");
  return p * model.dr(s) / denom;
}

double h_integral(const ModelSpec& model, double kappa) {
  return h_integral(model, kappa, kappa_star(model));
}

double h_integral(const ModelSpec& model, double kappa,
                  const CriticalCoupling& kstar) {
  require_below_kstar(kappa, kstar, "h_integral");
  return quad::checked_simpson(
      [&](double s) { return h_integrand(model, kappa, s); }, 0.0, kTwoPi,
      kSimpsonPanels, kSimpsonTol);
}

double beta_kappa(const ModelSpec& model, double kappa, double s) {
  return kappa * h_integrand(model, kappa, s);
}

double DispersionCurve::operator()(double phase) const {
  const std::size_t n = s.size() - 1;
  double u = std::fmod(phase, kTwoPi);
  if (u < 0.0) u += kTwoPi;
  const double pos = u / kTwoPi * static_cast<double>(n);
  std::size_t k = static_cast<std::size_t>(pos);
  if (k >= n) k = n - 1;
  const double w = pos - static_cast<double>(k);
  return (1.0 - w) * delta[k] + w * delta[k + 1];
}

double DispersionCurve::max() const {
  return *std::max_element(delta.begin(), delta.end());
}

double DispersionCurve::min() const {
  return *std::min_element(delta.begin(), delta.end());
}

double DispersionCurve::upper_bound() const {
  return alpha * kTwoPi * std::exp(beta_negative_integral) /
         (-std::expm1(-beta_integral()));
}

DispersionCurve periodic_affine_solution(double alpha,
                                         const std::function<double(double)>& beta_fn,
                                         std::size_t grid) {
  if (!(alpha > 0.0))
    throw std::domain_error("periodic_affine_solution: alpha must be positive");
  if (grid < 4 || grid % 2 != 0)
    throw std::invalid_argument("periodic_affine_solution: grid must be even and >= 4");

  DispersionCurve curve;
  curve.alpha = alpha;
  curve.s.resize(grid + 1);
  curve.beta.resize(grid + 1);
  const double h = kTwoPi / static_cast<double>(grid);
  for (std::size_t k = 0; k <= grid; ++k) {
    curve.s[k] = (k == grid) ? kTwoPi : h * static_cast<double>(k);
    curve.beta[k] = beta_fn(curve.s[k]);
  }
  curve.cumulative = quad::cumulative_integral(beta_fn, curve.s);
  const double total = curve.cumulative.back();
  if (!(total > kH3Margin)) {
    std::ostringstream msg;
    msg << "periodic_affine_solution: int_0^{2pi} beta = " << total
        << " is not positive";
    throw std::domain_error(msg.str());
  }
  curve.beta_negative_integral = quad::negative_part_integral(beta_fn, 0.0, kTwoPi);

  // Delta(s_k) = alpha int_{s_k}^{s_k+2pi} exp(B(t) - B(s_k) - total) dt
  //              / (1 - exp(-total)),
  // with B extended by B(t + 2pi) = B(t) + total. Simpson over grid nodes.
  const double denom = -std::expm1(-total);
  const auto& B = curve.cumulative;
  curve.delta.resize(grid + 1);
  for (std::size_t k = 0; k <= grid; ++k) {
    const double base = B[k] + total;
    double sum = 0.0;
    for (std::size_t j = 0; j <= grid; ++j) {
      const std::size_t idx = k + j;
      const double bt = idx <= grid ? B[idx] : B[idx - grid] + total;
      const double w = (j == 0 || j == grid) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
      sum += w * std::exp(bt - base);
    }
    curve.delta[k] = alpha * (h / 3.0) * sum / denom;
  }
  return curve;
}

double alpha_term(double gamma, double kappa, double capacity,
                  const TheoryConstants& constants, const CriticalCoupling& kstar) {
  const double q = kstar.ratio(kappa);
  const double margin = 1.0 - gamma - constants.c_tilde * kappa * capacity - q;
  if (!(margin > 0.0))
    throw std::domain_error("alpha_term: condition 1 - gamma - C~ kappa D - kappa/kappa_* > 0 fails");
  const double drift = 2.0 * gamma + constants.c * kappa * capacity * capacity;
  const double spread = gamma + constants.c_tilde * kappa * capacity;
  return drift / (1.0 - q) +
         (drift + constants.c_tilde * kappa * capacity) * spread / (margin * (1.0 - q));
}

double capacity_D(double kappa, const TheoryConstants& constants,
                  const CriticalCoupling& kstar, double gain) {
  if (!(kappa > 0.0) || !kstar.admits(kappa))
    throw std::domain_error("capacity_D: kappa must lie in (0, kappa_*)");
  const double slack = 1.0 - kstar.ratio(kappa);
  const double ct = constants.c_tilde;
  const double denom =
      2.0 * (2.0 + constants.c) / slack + 2.0 * ct * (1.0 + ct) * kappa / (slack * slack);
  return std::min(1.0, gain / denom);
}

double gain_L(const ModelSpec& model, double kappa) {
  return gain_L(model, kappa, kappa_star(model));
}

double gain_L(const ModelSpec& model, double kappa, const CriticalCoupling& kstar) {
  if (!(kappa > 0.0) || !kstar.admits(kappa))
    throw std::domain_error("gain_L: kappa must lie in (0, kappa_*)");
  const double total = kappa * h_integral(model, kappa, kstar);
  if (!(total > kH3Margin)) {
    std::ostringstream msg;
    msg << "gain_L: synchronization hypothesis fails, int beta_kappa = " << total;
    throw H3Failure(total, msg.str());
  }
  const double negative = quad::negative_part_integral(
      [&](double s) { return beta_kappa(model, kappa, s); }, 0.0, kTwoPi,
      kSimpsonPanels);
  return -std::expm1(-total) / (kTwoPi * kappa * std::exp(negative));
}

std::optional<double> DomainCertificate::max_delta() const {
  if (!curve) return std::nullopt;
  return curve->max();
}

DomainCertificate certify_domain(const ModelSpec& model, double gamma, double kappa) {
  return certify_domain(model, gamma, kappa, kappa_star(model));
}

DomainCertificate certify_domain(const ModelSpec& model, double gamma, double kappa,
                                 const CriticalCoupling& kstar) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("certify_domain: gamma must lie in (0, 1)");
  if (!(kappa > 0.0))
    throw std::invalid_argument("certify_domain: kappa must be positive");

  DomainCertificate cert;
  cert.gamma = gamma;
  cert.kappa = kappa;
  cert.kstar = kstar;
  cert.constants = TheoryConstants::from(model);
  cert.below_kstar = kstar.admits(kappa);
  if (!cert.below_kstar) return cert;

  cert.gain = gain_L(model, kappa, kstar);
  cert.capacity = capacity_D(kappa, cert.constants, kstar, *cert.gain);
  const double d = *cert.capacity;
  cert.gamma_below_bound = gamma < kappa * d * d;
  cert.condition8 =
      1.0 - gamma - cert.constants.c_tilde * kappa * d - kstar.ratio(kappa) > 0.0;
  if (!cert.condition8) return cert;

  cert.alpha = alpha_term(gamma, kappa, d, cert.constants, kstar);
  if (!cert.gamma_below_bound) return cert;

  cert.curve = periodic_affine_solution(
      *cert.alpha, [&](double s) { return beta_kappa(model, kappa, s); });
  cert.in_U = cert.curve->max() < d;
  return cert;
}

bool in_invariant_set(std::span<const double> x, const DomainCertificate& certificate) {
  if (!certificate.in_U || !certificate.curve)
    throw std::invalid_argument("in_invariant_set: certificate is not in U");
  const auto md = mean_dispersion(x);
  return md.dispersion < (*certificate.curve)(md.mean);
}

nlohmann::json to_json(const DomainCertificate& c) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["gamma"] = c.gamma;
  j["kappa"] = c.kappa;
  j["kappa_star"] = c.kstar.is_unbounded() ? nlohmann::json("unbounded")
                                           : nlohmann::json(c.kstar.value());
  j["C"] = c.constants.c;
  j["C_tilde"] = c.constants.c_tilde;
  j["L"] = opt(c.gain);
  j["D"] = opt(c.capacity);
  j["alpha"] = opt(c.alpha);
  j["below_kappa_star"] = c.below_kstar;
  j["gamma_below_bound"] = c.gamma_below_bound;
  j["condition8"] = c.condition8;
  j["in_U"] = c.in_U;
  j["max_delta"] = opt(c.max_delta());
  return j;
}

}  // namespace winfree
