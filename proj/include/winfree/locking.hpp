#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "winfree/integrator.hpp"
#include "winfree/model.hpp"
#include "winfree/theory.hpp"

namespace winfree {

/// The fixed-point iteration did not converge. This says nothing about the
/// existence of a locked orbit.
class NoLockedSolution : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PoincareImage {
  std::vector<double> x;  // Phi^theta(X) - 2pi 1, mean re-imposed to zero
  double return_time = 0.0;
  double raw_mean_error = 0.0;  // |mean(Phi^theta(X)) - 2pi| before re-imposition
};

/// First return to the section mean = 0 after one turn of the mean.
/// Requires |mean(x)| <= 1e-10. Propagates NoCrossing / MeanNotIncreasing.
PoincareImage poincare_map(std::span<const double> x, const EnsembleParams& params,
                           const ModelSpec& model, const IntegratorConfig& config,
                           double t_max);

/// Strict bounds on the return time to the section:
/// 2pi / (1 + gamma + kappa |P| |R|) < theta < 2pi / (1 - gamma - C~ kappa D - kappa/kappa_*).
std::pair<double, double> return_time_bounds(const EnsembleParams& params,
                                             const ModelSpec& model,
                                             const DomainCertificate& certificate);

/// Deviations Psi_i(s) = x_i(s) - Omega s along one period.
struct PsiSamples {
  std::vector<double> s;
  std::vector<std::vector<double>> psi;  // psi[k][i] at s[k]
  std::vector<double> max_abs_each;      // sup_s |Psi_i|
  double max_abs = 0.0;                  // max_i sup_s |Psi_i|
  double periodicity_gap = 0.0;          // max_i |Psi_i(0) - Psi_i(theta)|
};

/// Requires a trajectory over exactly one period [0, theta]; throws
/// std::runtime_error when the orbit does not close within tol.
PsiSamples extract_psi(const Trajectory& period, double omega, double tol = 1e-7);

struct LockingOptions {
  std::size_t max_iters = 5000;
  double map_tolerance = 1e-10;   // |P(X) - X|_inf to stop iterating
  double flow_tolerance = 1e-8;   // |Phi^theta(X) - X - 2pi 1|_inf to accept
  double psi_tolerance = 1e-7;
  double t_max = 0.0;             // per return; 0 picks twice the upper bound
  bool anderson = false;
  std::size_t anderson_depth = 5;
  std::size_t psi_record_every = 1;
};

struct LockedSolution {
  std::vector<double> x_star;
  double theta = 0.0;
  double omega = 0.0;  // rotation number 2pi / theta
  PsiSamples psi;
  double map_residual = 0.0;
  double flow_residual = 0.0;
  std::size_t iterations = 0;
};

/// Picard iteration of the Poincare map (Anderson mixing when requested)
/// from the ordered near-diagonal state. Requires an in-U certificate that
/// covers params.
LockedSolution find_locked_solution(const EnsembleParams& params,
                                    const ModelSpec& model,
                                    const IntegratorConfig& config,
                                    const DomainCertificate& certificate,
                                    const LockingOptions& options = {});

nlohmann::json to_json(const LockedSolution& solution);

}  // namespace winfree
