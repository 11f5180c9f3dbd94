#include "winfree/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace winfree {

namespace {

constexpr std::size_t kCheckGrid = 4096;
constexpr double kPeriodicityTol = 1e-12;

void check_periodic_and_bounded(const PeriodicFn& f, double declared,
                                const char* name) {
  if (!f) throw std::invalid_argument(std::string("ModelSpec: missing ") + name);
  if (!(declared >= 0.0) || !std::isfinite(declared))
    throw std::invalid_argument(std::string("ModelSpec: sup-norm of ") + name +
                                " must be finite and nonnegative");
  double observed = 0.0;
  for (std::size_t k = 0; k < kCheckGrid; ++k) {
    const double x = kTwoPi * static_cast<double>(k) / kCheckGrid;
    const double v = f(x);
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string("ModelSpec: ") + name +
                                  " is not finite on [0, 2pi]");
    const double shifted = f(x + kTwoPi);
    if (std::abs(shifted - v) > kPeriodicityTol * std::max(1.0, std::abs(v)))
      throw std::invalid_argument(std::string("ModelSpec: ") + name +
                                  " is not 2pi-periodic");
    observed = std::max(observed, std::abs(v));
  }
  if (observed > declared * (1.0 + 1e-12) + 1e-15)
    throw std::invalid_argument(std::string("ModelSpec: declared sup-norm of ") +
                                name + " is below its sampled maximum");
}

}  // namespace

ModelSpec::ModelSpec(PeriodicFn p, PeriodicFn dp, PeriodicFn r, PeriodicFn dr,
                     PeriodicFn ddr, SupNorms norms)
    : p_(std::move(p)),
      dp_(std::move(dp)),
      r_(std::move(r)),
      dr_(std::move(dr)),
      ddr_(std::move(ddr)),
      norms_(norms) {
  check_periodic_and_bounded(p_, norms_.p, "P");
  check_periodic_and_bounded(dp_, norms_.dp, "P'");
  check_periodic_and_bounded(r_, norms_.r, "R");
  check_periodic_and_bounded(dr_, norms_.dr, "R'");
  check_periodic_and_bounded(ddr_, norms_.ddr, "R''");
}

SimplifiedModel::SimplifiedModel(double beta) : beta_(beta) {
  if (!(beta >= 0.0 && beta <= std::numbers::pi))
    throw std::invalid_argument("SimplifiedModel: beta must lie in [0, pi]");
}

ModelSpec SimplifiedModel::spec() const {
  const double b = beta_;
  ModelSpec spec(
      [b](double x) { return 1.0 + std::cos(x + b); },
      [b](double x) { return -std::sin(x + b); },
      [](double x) { return std::sin(x); },
      [](double x) { return std::cos(x); },
      [](double x) { return -std::sin(x); },
      SupNorms{.p = 2.0, .dp = 1.0, .r = 1.0, .dr = 1.0, .ddr = 1.0});
  spec.beta_ = b;
  return spec;
}

ModelSpec simplified_model(double beta) { return SimplifiedModel(beta).spec(); }

EnsembleParams::EnsembleParams(double kappa, double gamma,
                               std::vector<double> omega)
    : kappa_(kappa), gamma_(gamma), omega_(std::move(omega)) {
  if (omega_.empty())
    throw std::invalid_argument("EnsembleParams: need at least one oscillator");
  if (!(kappa_ >= 0.0) || !std::isfinite(kappa_))
    throw std::invalid_argument("EnsembleParams: kappa must be finite and >= 0");
  if (!(gamma_ >= 0.0 && gamma_ < 1.0))
    throw std::invalid_argument("EnsembleParams: gamma must lie in [0, 1)");
  // Equidistant endpoints may carry one ulp of roundoff.
  const double slack = 1e-12;
  for (double w : omega_) {
    if (!(w >= 1.0 - gamma_ - slack && w <= 1.0 + gamma_ + slack))
      throw std::invalid_argument(
          "EnsembleParams: natural frequency outside [1 - gamma, 1 + gamma]");
  }
}

void evaluate_field(std::span<const double> x, const EnsembleParams& params,
                    const ModelSpec& model, std::span<double> out) {
  const std::size_t n = params.size();
  if (x.size() != n || out.size() != n)
    throw std::invalid_argument("evaluate_field: dimension mismatch");
  double field = 0.0;
  for (double xj : x) field += model.p(xj);
  field *= params.kappa() / static_cast<double>(n);
  const auto& omega = params.omega();
  for (std::size_t i = 0; i < n; ++i) out[i] = omega[i] - field * model.r(x[i]);
}

std::vector<double> vector_field(const EnsembleState& state,
                                 const EnsembleParams& params,
                                 const ModelSpec& model) {
  std::vector<double> out(state.x.size());
  evaluate_field(state.x, params, model, out);
  return out;
}

std::vector<double> make_frequencies(std::size_t n, double gamma,
                                     FrequencyScheme scheme,
                                     std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("make_frequencies: N must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("make_frequencies: gamma must lie in [0, 1)");

  std::vector<double> omega(n);
  switch (scheme) {
    case FrequencyScheme::equidistant:
      if (n == 1) {
        omega[0] = 1.0;
        break;
      }
      for (std::size_t i = 0; i < n; ++i)
        omega[i] = 1.0 - gamma +
                   2.0 * gamma * static_cast<double>(i) / static_cast<double>(n - 1);
      break;
    case FrequencyScheme::seeded_uniform: {
      std::mt19937_64 gen(seed);
      for (auto& w : omega) w = 1.0 - gamma + 2.0 * gamma * uniform_unit(gen);
      std::sort(omega.begin(), omega.end());
      break;
    }
  }
  return omega;
}

EnsembleState make_initial_conditions(std::size_t n, double low, double high,
                                      std::uint64_t seed) {
  if (n == 0)
    throw std::invalid_argument("make_initial_conditions: N must be >= 1");
  if (!(low <= high) || !std::isfinite(low) || !std::isfinite(high))
    throw std::invalid_argument("make_initial_conditions: need low <= high");
  std::mt19937_64 gen(seed);
  EnsembleState state;
  state.x.resize(n);
  for (auto& xi : state.x) xi = low + (high - low) * uniform_unit(gen);
  return state;
}

}  // namespace winfree
