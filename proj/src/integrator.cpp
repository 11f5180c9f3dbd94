#include "winfree/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace winfree {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

void guard_finite(const std::vector<double>& x, double t) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      std::ostringstream msg;
      msg << "non-finite phase lift x[" << i << "] near t=" << t;
      throw NonFiniteState(t, msg.str());
    }
  }
}

void check_dimensions(const EnsembleState& state, const EnsembleParams& params) {
  if (state.x.size() != params.size())
    throw std::invalid_argument("integrator: state and params differ in N");
}

// Step plan from t0 to t_end: n_full steps of h plus an optional shortened
// final step. Time stamps are t0 + k*h to avoid accumulating drift.
struct StepPlan {
  std::size_t full_steps = 0;
  double last = 0.0;  // length of the shortened final step, 0 if none
};

StepPlan plan_steps(double t0, double t_end, double h) {
  const double span = t_end - t0;
  StepPlan plan;
  plan.full_steps = static_cast<std::size_t>(std::floor(span / h));
  double rest = span - static_cast<double>(plan.full_steps) * h;
  if (rest > 1e-9 * h) {
    plan.last = rest;
  } else if (plan.full_steps > 0 && rest < -1e-9 * h) {
    --plan.full_steps;
    plan.last = span - static_cast<double>(plan.full_steps) * h;
  }
  return plan;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h))
    throw std::invalid_argument("IntegratorConfig: h must be positive");
  if (!(event_tolerance > 0.0))
    throw std::invalid_argument("IntegratorConfig: event_tolerance must be positive");
}

Rk4Stepper::Rk4Stepper(const EnsembleParams& params, const ModelSpec& model)
    : params_(params),
      model_(model),
      k1_(params.size()),
      k2_(params.size()),
      k3_(params.size()),
      k4_(params.size()),
      tmp_(params.size()) {}

void Rk4Stepper::derivative(std::span<const double> x, std::span<double> out) const {
  evaluate_field(x, params_, model_, out);
}

void Rk4Stepper::step(std::vector<double>& x, double dt) {
  const std::size_t n = x.size();
  evaluate_field(x, params_, model_, k1_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k1_[i];
  evaluate_field(tmp_, params_, model_, k2_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt * k2_[i];
  evaluate_field(tmp_, params_, model_, k3_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + dt * k3_[i];
  evaluate_field(tmp_, params_, model_, k4_);
  for (std::size_t i = 0; i < n; ++i)
    x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
}

EnsembleState integrate_observed(
    const EnsembleState& state0, const EnsembleParams& params,
    const ModelSpec& model, const IntegratorConfig& config, double t_end,
    const std::function<void(const EnsembleState&)>& observer) {
  config.validate();
  check_dimensions(state0, params);
  if (!(t_end > state0.t))
    throw std::invalid_argument("integrate: t_end must exceed the initial time");

  Rk4Stepper stepper(params, model);
  EnsembleState state = state0;
  guard_finite(state.x, state.t);
  if (observer) observer(state);

  const auto plan = plan_steps(state0.t, t_end, config.h);
  for (std::size_t k = 1; k <= plan.full_steps; ++k) {
    stepper.step(state.x, config.h);
    state.t = state0.t + static_cast<double>(k) * config.h;
    guard_finite(state.x, state.t);
    if (observer) observer(state);
  }
  if (plan.last > 0.0) {
    stepper.step(state.x, plan.last);
    guard_finite(state.x, t_end);
  }
  state.t = t_end;
  if (plan.last > 0.0 && observer) observer(state);
  return state;
}

Trajectory integrate(const EnsembleState& state0, const EnsembleParams& params,
                     const ModelSpec& model, const IntegratorConfig& config,
                     double t_end, std::size_t record_every) {
  if (record_every == 0)
    throw std::invalid_argument("integrate: record_every must be >= 1");
  Trajectory traj;
  std::size_t counter = 0;
  bool last_recorded = false;
  EnsembleState last;
  last = integrate_observed(state0, params, model, config, t_end,
                            [&](const EnsembleState& s) {
                              last_recorded = (counter % record_every == 0);
                              if (last_recorded) {
                                traj.t.push_back(s.t);
                                traj.x.push_back(s.x);
                                traj.observables.push_back(observe(s.x));
                              }
                              ++counter;
                            });
  if (!last_recorded) {
    traj.t.push_back(last.t);
    traj.x.push_back(last.x);
    traj.observables.push_back(observe(last.x));
  }
  return traj;
}

MeanCrossing integrate_until_mean(const EnsembleState& state0,
                                  const EnsembleParams& params,
                                  const ModelSpec& model,
                                  const IntegratorConfig& config,
                                  double target_mean, double t_max) {
  config.validate();
  check_dimensions(state0, params);
  const double mu0 = mean_of(state0.x);
  if (!(mu0 < target_mean))
    throw std::invalid_argument(
        "integrate_until_mean: initial mean must lie below the target");
  if (!(t_max > state0.t))
    throw std::invalid_argument("integrate_until_mean: t_max must exceed t0");

  Rk4Stepper stepper(params, model);
  std::vector<double> x = state0.x;
  std::vector<double> next(x.size());
  double t = state0.t;
  double mu = mu0;
  double decreasing_for = 0.0;
  std::size_t k = 0;

  while (t < t_max) {
    const double dt = std::min(config.h, t_max - t);
    next = x;
    stepper.step(next, dt);
    const double t_next = (dt == config.h)
                              ? state0.t + static_cast<double>(k + 1) * config.h
                              : t_max;
    guard_finite(next, t_next);
    const double mu_next = mean_of(next);

    if (mu_next >= target_mean) {
      if (mu_next - target_mean <= config.event_tolerance)
        return {{t_next, next}, t_next};

      // Cubic Hermite guess for the crossing inside [0, dt].
      std::vector<double> deriv(x.size());
      stepper.derivative(x, deriv);
      const double v0 = mean_of(deriv);
      stepper.derivative(next, deriv);
      const double v1 = mean_of(deriv);
      auto hermite = [&](double tau) {
        const double s = tau / dt;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        return h00 * mu + h10 * dt * v0 + h01 * mu_next + h11 * dt * v1 -
               target_mean;
      };
      double a = 0.0;
      double b = dt;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        (hermite(m) < 0.0 ? a : b) = m;
      }
      const double guess = 0.5 * (a + b);

      // Refine on genuine RK4 sub-steps (regula falsi, Illinois variant).
      std::vector<double> trial(x.size());
      auto residual = [&](double tau) {
        trial = x;
        stepper.step(trial, tau);
        return mean_of(trial) - target_mean;
      };
      double lo = 0.0;
      double hi = dt;
      double g_lo = mu - target_mean;
      double g_hi = mu_next - target_mean;
      double tau = guess;
      int side = 0;
      for (int it = 0; it < 200; ++it) {
        const double g = residual(tau);
        if (std::abs(g) <= config.event_tolerance)
          return {{t + tau, trial}, t + tau};
        if (g < 0.0) {
          lo = tau;
          g_lo = g;
          if (side == -1) g_hi *= 0.5;
          side = -1;
        } else {
          hi = tau;
          g_hi = g;
          if (side == 1) g_lo *= 0.5;
          side = 1;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t))
          break;
        tau = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if (!(tau > lo && tau < hi)) tau = 0.5 * (lo + hi);
      }
      // Bracket collapsed to roundoff: return the closer endpoint.
      residual(hi);
      return {{t + hi, trial}, t + hi};
    }

    decreasing_for = (mu_next < mu) ? decreasing_for + dt : 0.0;
    if (decreasing_for >= kTwoPi)
      throw MeanNotIncreasing(
          "integrate_until_mean: mean decreased over a full 2pi time window");

    x.swap(next);
    mu = mu_next;
    t = t_next;
    ++k;
  }
  std::ostringstream msg;
  msg << "integrate_until_mean: mean " << mu << " did not reach " << target_mean
      << " by t_max=" << t_max;
  throw NoCrossing(msg.str());
}

}  // namespace winfree
