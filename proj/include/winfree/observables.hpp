#pragma once

#include <numbers>
#include <span>
#include <string_view>

namespace winfree {

struct MeanDispersion {
  double mean = 0.0;
  double dispersion = 0.0;  // max_{i,j} |x_i - x_j|
};

/// Snapshot observables of an ensemble of lifts.
struct Observables {
  double mean = 0.0;        // mu
  double dispersion = 0.0;  // delta, max pairwise spread of lifts
  double deviation = 0.0;   // d, max |x_i - mu|
  double coherence = 0.0;   // r, modulus of the mean unit phasor
};

/// Mean of the lifts and max(x) - min(x). Throws on empty input.
MeanDispersion mean_dispersion(std::span<const double> x);

/// |(1/N) sum_j exp(i x_j)|, in [0, 1].
double order_r(std::span<const double> x);

/// max_i |x_i - mean(x)|.
double order_d(std::span<const double> x);

Observables observe(std::span<const double> x);

enum class Verdict { synchronized, desynchronized };

inline constexpr double kDefaultSyncThreshold = 3.0 * std::numbers::pi;

/// Synchronized iff d < threshold (strict).
Verdict sync_verdict(double final_deviation,
                     double threshold = kDefaultSyncThreshold);

std::string_view to_string(Verdict v);

}  // namespace winfree
