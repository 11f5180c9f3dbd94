#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace winfree {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using PeriodicFn = std::function<double(double)>;

/// Declared sup-norms of the coupling functions and the derivatives used by
/// the dispersion estimates.
struct SupNorms {
  double p = 0.0;
  double dp = 0.0;
  double r = 0.0;
  double dr = 0.0;
  double ddr = 0.0;
};

/// Coupling pair (P, R) of the Winfree mean field, with derivative evaluators.
///
/// P and R must be 2*pi-periodic. The constructor samples both on a 4096-point
/// grid and rejects non-periodic functions or sup-norms smaller than the
/// sampled maxima.
class ModelSpec {
 public:
  ModelSpec(PeriodicFn p, PeriodicFn dp, PeriodicFn r, PeriodicFn dr,
            PeriodicFn ddr, SupNorms norms);

  double p(double x) const { return p_(x); }
  double dp(double x) const { return dp_(x); }
  double r(double x) const { return r_(x); }
  double dr(double x) const { return dr_(x); }
  double ddr(double x) const { return ddr_(x); }

  const SupNorms& sup_norms() const { return norms_; }

  /// Phase offset when the model belongs to the P_beta / sin family.
  std::optional<double> beta() const { return beta_; }

 private:
  friend class SimplifiedModel;

  PeriodicFn p_, dp_, r_, dr_, ddr_;
  SupNorms norms_;
  std::optional<double> beta_;
};

/// P_beta(x) = 1 + cos(x + beta), R(x) = sin(x), beta in [0, pi].
class SimplifiedModel {
 public:
  explicit SimplifiedModel(double beta);

  double beta() const { return beta_; }
  ModelSpec spec() const;

 private:
  double beta_;
};

/// Convenience for SimplifiedModel(beta).spec().
ModelSpec simplified_model(double beta);

/// Coupling strength, spectrum half-width and natural frequencies.
class EnsembleParams {
 public:
  /// Throws std::invalid_argument if omega is empty, kappa < 0, gamma is
  /// outside [0, 1) or some omega_i lies outside [1 - gamma, 1 + gamma].
  EnsembleParams(double kappa, double gamma, std::vector<double> omega);

  std::size_t size() const { return omega_.size(); }
  double kappa() const { return kappa_; }
  double gamma() const { return gamma_; }
  const std::vector<double>& omega() const { return omega_; }

 private:
  double kappa_;
  double gamma_;
  std::vector<double> omega_;
};

/// Phase lifts at time t. Lifts live in R and are never reduced mod 2*pi.
struct EnsembleState {
  double t = 0.0;
  std::vector<double> x;
};

/// dx_i/dt = omega_i - kappa * m * R(x_i), m = (1/N) sum_j P(x_j).
/// out must have the same length as x.
void evaluate_field(std::span<const double> x, const EnsembleParams& params,
                    const ModelSpec& model, std::span<double> out);

std::vector<double> vector_field(const EnsembleState& state,
                                 const EnsembleParams& params,
                                 const ModelSpec& model);

enum class FrequencyScheme { equidistant, seeded_uniform };

std::vector<double> make_frequencies(std::size_t n, double gamma,
                                     FrequencyScheme scheme,
                                     std::uint64_t seed = 0);

/// N independent uniform draws in [low, high]; low == high yields a constant
/// state.
EnsembleState make_initial_conditions(std::size_t n, double low, double high,
                                      std::uint64_t seed);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw. Unlike
/// std::uniform_real_distribution the result does not depend on the standard
/// library vendor.
inline double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace winfree
