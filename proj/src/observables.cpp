#include "winfree/observables.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace winfree {

namespace {

void require_nonempty(std::span<const double> x, const char* what) {
  if (x.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

double mean_of(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

}  // namespace

MeanDispersion mean_dispersion(std::span<const double> x) {
  require_nonempty(x, "mean_dispersion");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return {mean_of(x), *hi - *lo};
}

double order_r(std::span<const double> x) {
  require_nonempty(x, "order_r");
  double c = 0.0;
  double s = 0.0;
  for (double v : x) {
    c += std::cos(v);
    s += std::sin(v);
  }
  const double n = static_cast<double>(x.size());
  return std::min(1.0, std::hypot(c / n, s / n));
}

double order_d(std::span<const double> x) {
  require_nonempty(x, "order_d");
  const double mu = mean_of(x);
  double d = 0.0;
  for (double v : x) d = std::max(d, std::abs(v - mu));
  return d;
}

Observables observe(std::span<const double> x) {
  const auto md = mean_dispersion(x);
  double d = 0.0;
  for (double v : x) d = std::max(d, std::abs(v - md.mean));
  return {md.mean, md.dispersion, d, order_r(x)};
}

Verdict sync_verdict(double final_deviation, double threshold) {
  if (!(threshold > 0.0))
    throw std::invalid_argument("sync_verdict: threshold must be positive");
  return final_deviation < threshold ? Verdict::synchronized
                                     : Verdict::desynchronized;
}

std::string_view to_string(Verdict v) {
  return v == Verdict::synchronized ? "synchronized" : "desynchronized";
}

}  // namespace winfree
