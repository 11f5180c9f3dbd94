#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "winfree/model.hpp"
#include "winfree/observables.hpp"

namespace winfree {

enum class Method { rk4 };

struct IntegratorConfig {
  double h = 1e-2;
  Method method = Method::rk4;
  double event_tolerance = 1e-12;  // on the mean value

  void validate() const;
};

/// Overflow or NaN in the state. Carries the last finite time.
class NonFiniteState : public std::runtime_error {
 public:
  NonFiniteState(double t, const std::string& what)
      : std::runtime_error(what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// The mean never reached the target before t_max.
class NoCrossing : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The mean kept decreasing for a full 2*pi time window.
class MeanNotIncreasing : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Recorded samples of one integration. observables[k] is observe(x[k]).
struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> x;
  std::vector<Observables> observables;

  std::size_t size() const { return t.size(); }
  EnsembleState state(std::size_t k) const { return {t[k], x[k]}; }
};

/// Classical RK4 with preallocated stage buffers.
class Rk4Stepper {
 public:
  Rk4Stepper(const EnsembleParams& params, const ModelSpec& model);

  /// Advances x in place by dt.
  void step(std::vector<double>& x, double dt);

  /// dx/dt at x, written to out.
  void derivative(std::span<const double> x, std::span<double> out) const;

 private:
  const EnsembleParams& params_;
  const ModelSpec& model_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

/// Calls observer on the initial state and after every step. Returns the
/// state at t_end. The last step is shortened to land exactly on t_end.
EnsembleState integrate_observed(
    const EnsembleState& state0, const EnsembleParams& params,
    const ModelSpec& model, const IntegratorConfig& config, double t_end,
    const std::function<void(const EnsembleState&)>& observer);

/// Records the initial state, every record_every-th step and the final state.
Trajectory integrate(const EnsembleState& state0, const EnsembleParams& params,
                     const ModelSpec& model, const IntegratorConfig& config,
                     double t_end, std::size_t record_every = 1);

struct MeanCrossing {
  EnsembleState state;
  double time = 0.0;
};

/// First state whose mean equals target_mean to within
/// config.event_tolerance. Requires mean(state0.x) < target_mean.
///
/// The crossing step is bracketed on consecutive RK4 samples, a first guess
/// is taken from the cubic Hermite interpolant of the mean, and the guess is
/// refined by bisection on genuine shortened RK4 steps so the returned state
/// lies on the discrete flow.
MeanCrossing integrate_until_mean(const EnsembleState& state0,
                                  const EnsembleParams& params,
                                  const ModelSpec& model,
                                  const IntegratorConfig& config,
                                  double target_mean, double t_max);

}  // namespace winfree
