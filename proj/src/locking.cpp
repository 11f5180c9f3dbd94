#include "winfree/locking.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "winfree/observables.hpp"

namespace winfree {

namespace {

constexpr double kSectionTol = 1e-10;

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

void center(std::vector<double>& x) {
  const double mu = mean_of(x);
  for (auto& v : x) v -= mu;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Anderson mixing on g(X) = P(X) - X with a sliding window of differences.
class AndersonMixer {
 public:
  explicit AndersonMixer(std::size_t depth) : depth_(depth) {}

  std::vector<double> next(const std::vector<double>& x, const std::vector<double>& fx) {
    const std::size_t n = x.size();
    Eigen::VectorXd g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = fx[i] - x[i];
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);

    if (has_prev_) {
      dx_.push_back(xv - prev_x_);
      dg_.push_back(g - prev_g_);
      if (dx_.size() > depth_) {
        dx_.pop_front();
        dg_.pop_front();
      }
    }
    prev_x_ = xv;
    prev_g_ = g;
    has_prev_ = true;

    Eigen::VectorXd out = xv + g;
    if (!dg_.empty()) {
      const auto m = static_cast<Eigen::Index>(dg_.size());
      Eigen::MatrixXd G(n, m), X(n, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        G.col(j) = dg_[static_cast<std::size_t>(j)];
        X.col(j) = dx_[static_cast<std::size_t>(j)];
      }
      const Eigen::VectorXd coef = G.colPivHouseholderQr().solve(g);
      if (coef.allFinite()) out -= (X + G) * coef;
    }
    return {out.data(), out.data() + n};
  }

  void reset() {
    dx_.clear();
    dg_.clear();
    has_prev_ = false;
  }

 private:
  std::size_t depth_;
  std::deque<Eigen::VectorXd> dx_, dg_;
  Eigen::VectorXd prev_x_, prev_g_;
  bool has_prev_ = false;
};

}  // namespace

PoincareImage poincare_map(std::span<const double> x, const EnsembleParams& params,
                           const ModelSpec& model, const IntegratorConfig& config,
                           double t_max) {
  if (x.size() != params.size())
    throw std::invalid_argument("poincare_map: dimension mismatch");
  const double mu = mean_of(x);
  if (std::abs(mu) > kSectionTol)
    throw std::invalid_argument("poincare_map: state is not on the section mean = 0");

  EnsembleState start{0.0, {x.begin(), x.end()}};
  const auto hit = integrate_until_mean(start, params, model, config, kTwoPi, t_max);
  PoincareImage image;
  image.return_time = hit.time;
  image.x = hit.state.x;
  for (auto& v : image.x) v -= kTwoPi;
  image.raw_mean_error = std::abs(mean_of(image.x));
  center(image.x);
  return image;
}

std::pair<double, double> return_time_bounds(const EnsembleParams& params,
                                             const ModelSpec& model,
                                             const DomainCertificate& certificate) {
  if (!certificate.capacity)
    throw std::invalid_argument("return_time_bounds: certificate lacks D(kappa)");
  const auto& norms = model.sup_norms();
  const double k = params.kappa();
  const double g = params.gamma();
  const double lower = kTwoPi / (1.0 + g + k * norms.p * norms.r);
  const double slow = 1.0 - g - certificate.constants.c_tilde * k * *certificate.capacity -
                      certificate.kstar.ratio(k);
  if (!(slow > 0.0))
    throw std::domain_error("return_time_bounds: mean velocity bound is not positive");
  return {lower, kTwoPi / slow};
}

PsiSamples extract_psi(const Trajectory& period, double omega, double tol) {
  if (period.size() < 2)
    throw std::invalid_argument("extract_psi: need at least two samples");
  PsiSamples out;
  const std::size_t n = period.x.front().size();
  out.max_abs_each.assign(n, 0.0);
  out.s = period.t;
  out.psi.reserve(period.size());
  const double t0 = period.t.front();
  for (std::size_t k = 0; k < period.size(); ++k) {
    const double s = period.t[k] - t0;
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = period.x[k][i] - omega * s;
      out.max_abs_each[i] = std::max(out.max_abs_each[i], std::abs(row[i]));
    }
    out.psi.push_back(std::move(row));
  }
  out.max_abs = *std::max_element(out.max_abs_each.begin(), out.max_abs_each.end());
  out.periodicity_gap = sup_distance(out.psi.front(), out.psi.back());
  if (out.periodicity_gap > tol) {
    std::ostringstream msg;
    msg << "extract_psi: orbit does not close, gap " << out.periodicity_gap;
    throw std::runtime_error(msg.str());
  }
  return out;
}

LockedSolution find_locked_solution(const EnsembleParams& params,
                                    const ModelSpec& model,
                                    const IntegratorConfig& config,
                                    const DomainCertificate& certificate,
                                    const LockingOptions& options) {
  if (!certificate.in_U || !certificate.curve)
    throw std::invalid_argument("find_locked_solution: (gamma, kappa) is not certified in U");
  if (params.gamma() > certificate.gamma || params.kappa() != certificate.kappa)
    throw std::invalid_argument(
        "find_locked_solution: certificate does not cover these parameters");

  const std::size_t n = params.size();
  const auto bounds = return_time_bounds(params, model, certificate);
  const double t_max = options.t_max > 0.0 ? options.t_max : 2.0 * bounds.second;

  // Ordered near-diagonal start, pulled inside the invariant set if needed.
  std::vector<double> x(n, 0.0);
  if (params.gamma() > 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      x[i] = 1e-3 * (params.omega()[i] - 1.0) / params.gamma();
  }
  center(x);
  const double width = (*certificate.curve)(0.0);
  const double spread = mean_dispersion(x).dispersion;
  if (spread >= width) {
    const double scale = 0.5 * width / spread;
    for (auto& v : x) v *= scale;
  }

  AndersonMixer mixer(options.anderson_depth);
  std::vector<double> last_image;
  LockedSolution sol;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    PoincareImage image;
    try {
      image = poincare_map(x, params, model, config, t_max);
    } catch (const std::runtime_error&) {
      if (!options.anderson || last_image.empty()) throw;
      // An extrapolated iterate left the locking region; restart the mixing
      // from the last Picard image.
      mixer.reset();
      x = last_image;
      continue;
    }
    last_image = image.x;
    const double residual = sup_distance(image.x, x);
    sol.iterations = it;
    if (residual <= options.map_tolerance) {
      // Flow check from the latest iterate: one full turn must come back
      // displaced by exactly 2pi.
      EnsembleState start{0.0, image.x};
      const auto hit = integrate_until_mean(start, params, model, config, kTwoPi, t_max);
      double flow = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        flow = std::max(flow, std::abs(hit.state.x[i] - image.x[i] - kTwoPi));
      if (flow <= options.flow_tolerance) {
        sol.x_star = image.x;
        sol.theta = hit.time;
        sol.omega = kTwoPi / hit.time;
        sol.map_residual = residual;
        sol.flow_residual = flow;
        const auto period = integrate(start, params, model, config, sol.theta,
                                      options.psi_record_every);
        sol.psi = extract_psi(period, sol.omega, options.psi_tolerance);
        return sol;
      }
    }
    x = options.anderson ? mixer.next(x, image.x) : image.x;
    center(x);
  }
  std::ostringstream msg;
  msg << "find_locked_solution: no locked solution found within " << options.max_iters
      << " iterations";
  throw NoLockedSolution(msg.str());
}

nlohmann::json to_json(const LockedSolution& s) {
  nlohmann::json j;
  j["x_star"] = s.x_star;
  j["theta"] = s.theta;
  j["omega"] = s.omega;
  j["max_abs_psi"] = s.psi.max_abs;
  j["max_abs_psi_each"] = s.psi.max_abs_each;
  j["psi_periodicity_gap"] = s.psi.periodicity_gap;
  j["map_residual"] = s.map_residual;
  j["flow_residual"] = s.flow_residual;
  j["iterations"] = s.iterations;
  return j;
}

}  // namespace winfree
