#include "winfree/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace winfree::quad {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes = {
    0.0, -0.5384693101056830910363144, 0.5384693101056830910363144,
    -0.9061798459386639927976269, 0.9061798459386639927976269};
constexpr std::array<double, 5> kGlWeights = {
    0.5688888888888888888888889, 0.4786286704993664680412915,
    0.4786286704993664680412915, 0.2369268850561890875142640,
    0.2369268850561890875142640};

double gl_cell(const Integrand& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i)
    sum += kGlWeights[i] * f(mid + half * kGlNodes[i]);
  return half * sum;
}

double bisect_root(const Integrand& f, double a, double fa, double b) {
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double simpson(const Integrand& f, double a, double b, std::size_t panels) {
  if (panels == 0 || panels % 2 != 0)
    throw std::invalid_argument("simpson: panel count must be even and positive");
  const double h = (b - a) / static_cast<double>(panels);
  double ends = f(a) + f(b);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t k = 1; k < panels; ++k) {
    const double v = f(a + static_cast<double>(k) * h);
    (k % 2 == 1 ? odd : even) += v;
  }
  return h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
}

double checked_simpson(const Integrand& f, double a, double b,
                       std::size_t panels, double tol) {
  const double fine = simpson(f, a, b, panels);
  const double coarse = simpson(f, a, b, panels / 2);
  if (!std::isfinite(fine) || std::abs(fine - coarse) > tol) {
    std::ostringstream msg;
    msg << "Simpson halving check failed: " << fine << " vs " << coarse;
    throw QuadratureError(msg.str());
  }
  return fine;
}

double gauss_legendre(const Integrand& f, double a, double b, std::size_t cells) {
  if (cells == 0) throw std::invalid_argument("gauss_legendre: cells must be >= 1");
  const double h = (b - a) / static_cast<double>(cells);
  double sum = 0.0;
  for (std::size_t k = 0; k < cells; ++k)
    sum += gl_cell(f, a + static_cast<double>(k) * h,
                   a + static_cast<double>(k + 1) * h);
  return sum;
}

std::vector<double> cumulative_integral(const Integrand& f,
                                        const std::vector<double>& nodes) {
  std::vector<double> out(nodes.size(), 0.0);
  for (std::size_t k = 1; k < nodes.size(); ++k)
    out[k] = out[k - 1] + gl_cell(f, nodes[k - 1], nodes[k]);
  return out;
}

double negative_part_integral(const Integrand& f, double a, double b,
                              std::size_t cells) {
  if (cells == 0)
    throw std::invalid_argument("negative_part_integral: cells must be >= 1");
  const double h = (b - a) / static_cast<double>(cells);
  double total = 0.0;
  double x0 = a;
  double f0 = f(a);
  for (std::size_t k = 1; k <= cells; ++k) {
    const double x1 = (k == cells) ? b : a + static_cast<double>(k) * h;
    const double f1 = f(x1);
    const bool neg0 = f0 < 0.0;
    const bool neg1 = f1 < 0.0;
    if (neg0 && neg1) {
      total -= gl_cell(f, x0, x1);
    } else if (neg0 != neg1) {
      const double root = bisect_root(f, x0, f0, x1);
      total -= neg0 ? gl_cell(f, x0, root) : gl_cell(f, root, x1);
    } else {
      // Both ends nonnegative; a dip below zero strictly inside the cell is
      // caught by probing the midpoint.
      const double mid = 0.5 * (x0 + x1);
      if (f(mid) < 0.0) {
        const double r0 = bisect_root(f, x0, f0, mid);
        const double r1 = bisect_root(f, mid, f(mid), x1);
        total -= gl_cell(f, r0, r1);
      }
    }
    x0 = x1;
    f0 = f1;
  }
  return std::max(0.0, total);
}

Extremum grid_golden_max(const Integrand& f, double a, double b,
                         std::size_t grid, double tol) {
  if (grid < 2) throw std::invalid_argument("grid_golden_max: grid too small");
  const double h = (b - a) / static_cast<double>(grid);
  std::size_t best = 0;
  double best_val = f(a);
  for (std::size_t k = 1; k <= grid; ++k) {
    const double v = f(a + static_cast<double>(k) * h);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = a + static_cast<double>(best == 0 ? 0 : best - 1) * h;
  double hi = std::min(b, a + static_cast<double>(best + 1) * h);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > tol) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double x = 0.5 * (lo + hi);
  const double v = f(x);
  // The grid sample can beat the refined point when the maximum sits on an
  // interval endpoint.
  if (best_val > v) return {a + static_cast<double>(best) * h, best_val};
  return {x, v};
}

}  // namespace winfree::quad
