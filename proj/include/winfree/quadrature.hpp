#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace winfree::quad {

using Integrand = std::function<double(double)>;

/// Raised when the halving estimate of a quadrature exceeds its tolerance.
class QuadratureError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Composite Simpson rule on [a, b]; panels must be even and positive.
double simpson(const Integrand& f, double a, double b, std::size_t panels);

/// Simpson with `panels` and `panels / 2`; the difference is the error
/// estimate and must not exceed tol.
double checked_simpson(const Integrand& f, double a, double b,
                       std::size_t panels = 4096, double tol = 1e-9);

/// Composite 5-point Gauss-Legendre on [a, b] split into `cells` cells.
double gauss_legendre(const Integrand& f, double a, double b,
                      std::size_t cells = 1);

/// B_k = int_{nodes[0]}^{nodes[k]} f, one Gauss-Legendre cell per interval.
std::vector<double> cumulative_integral(const Integrand& f,
                                        const std::vector<double>& nodes);

/// int_a^b max(0, -f). Sign changes are bracketed on a `cells`-point grid
/// and bisected, so the kinks of the negative part never fall inside a
/// quadrature cell.
double negative_part_integral(const Integrand& f, double a, double b,
                              std::size_t cells = 4096);

struct Extremum {
  double x = 0.0;
  double value = 0.0;
};

/// Global maximum on [a, b]: grid scan (ties go to the smallest x) refined by
/// golden-section search on the neighbouring cells until the bracket is
/// below tol.
Extremum grid_golden_max(const Integrand& f, double a, double b,
                         std::size_t grid, double tol = 1e-12);

}  // namespace winfree::quad
