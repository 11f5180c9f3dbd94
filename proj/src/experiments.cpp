#include "winfree/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "winfree/integrator.hpp"
#include "winfree/locking.hpp"
#include "winfree/quadrature.hpp"
#include "winfree/theory.hpp"

namespace winfree::experiments {

namespace {

// Frequencies and initial conditions draw from distinct streams of one seed.
constexpr std::uint64_t kFrequencyStream = 0x9E3779B97F4A7C15ULL;

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  double parse() {
    const double v = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  double expr() {
    double v = term();
    for (;;) {
      skip_ws();
      if (accept('+')) v += term();
      else if (accept('-')) v -= term();
      else return v;
    }
  }

  double term() {
    double v = factor();
    for (;;) {
      skip_ws();
      if (accept('*')) v *= factor();
      else if (accept('/')) v /= factor();
      else return v;
    }
  }

  double factor() {
    skip_ws();
    if (accept('-')) return -factor();
    if (accept('+')) return factor();
    if (accept('(')) {
      const double v = expr();
      skip_ws();
      if (!accept(')')) fail("missing ')'");
      return v;
    }
    if (text_.substr(pos_, 2) == "pi") {
      pos_ += 2;
      return std::numbers::pi;
    }
    double v = 0.0;
    const char* begin = text_.data() + pos_;
    const auto res = std::from_chars(begin, text_.data() + text_.size(), v);
    if (res.ec != std::errc()) fail("expected a number");
    pos_ += static_cast<std::size_t>(res.ptr - begin);
    return v;
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const char* why) const {
    std::ostringstream msg;
    msg << "cannot parse '" << text_ << "': " << why << " at offset " << pos_;
    throw std::invalid_argument(msg.str());
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto at = text.find(sep, start);
    parts.push_back(text.substr(start, at == std::string_view::npos ? at : at - start));
    if (at == std::string_view::npos) return parts;
    start = at + 1;
  }
}

void require_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw std::invalid_argument(std::string(name) + " is empty");
  for (double v : grid)
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(name) + " has a non-finite entry");
}

std::string fmt(double x) { return csv::format_number(x); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs one row per index in parallel; rows land in index order.
CommandResult run_rows(std::vector<std::string> columns, std::size_t count,
                       std::size_t workers,
                       const std::function<std::vector<std::string>(std::size_t)>& row) {
  CommandResult result;
  result.table.columns = std::move(columns);
  result.table.rows.resize(count);
  result.row_seconds.resize(count);
  parallel_for(count, workers, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    result.table.rows[i] = row(i);
    result.row_seconds[i] = seconds_since(start);
  });
  return result;
}

}  // namespace

double parse_real(std::string_view text) { return ExpressionParser(text).parse(); }

std::vector<double> parse_grid(std::string_view text) {
  const auto colon = split(text, ':');
  if (colon.size() == 3) {
    const double a = parse_real(colon[0]);
    const double b = parse_real(colon[1]);
    const double count = parse_real(colon[2]);
    if (!(count >= 1.0) || count != std::floor(count))
      throw std::invalid_argument("grid point count must be a positive integer");
    const auto n = static_cast<std::size_t>(count);
    if (n == 1) return {a};
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
      grid[i] = (i + 1 == n) ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return grid;
  }
  if (colon.size() != 1) throw std::invalid_argument("grid must be 'a:b:n' or a list");
  std::vector<double> grid;
  for (auto part : split(text, ',')) grid.push_back(parse_real(part));
  return grid;
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
        return;
      }
    }
  };
  if (workers == 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
  }
  if (error) std::rethrow_exception(error);
}

void RunConfig::validate() const {
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t-end must be positive");
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  if (!(ic_low <= ic_high)) throw std::invalid_argument("ic-low must not exceed ic-high");
  if (workers == 0) throw std::invalid_argument("workers must be >= 1");
  if (record_every == 0) throw std::invalid_argument("record-every must be >= 1");
  if (!(gamma_resolution > 0.0)) throw std::invalid_argument("gamma-resolution must be positive");
  if (!(gamma_cap > 0.0 && gamma_cap < 1.0)) throw std::invalid_argument("gamma-cap must lie in (0, 1)");
  if (majority_seeds == 0) throw std::invalid_argument("majority-seeds must be >= 1");
  for (const auto* g : {&grid_beta, &grid_kappa, &grid_gamma})
    for (double v : *g)
      if (!std::isfinite(v)) throw std::invalid_argument("grid has a non-finite entry");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["beta"] = beta;
  j["n"] = n;
  j["kappa"] = kappa;
  j["gamma"] = gamma;
  j["grid_beta"] = grid_beta;
  j["grid_kappa"] = grid_kappa;
  j["grid_gamma"] = grid_gamma;
  j["t_end"] = t_end;
  j["step"] = step;
  j["seed"] = seed;
  j["threshold"] = threshold;
  j["ic_low"] = ic_low;
  j["ic_high"] = ic_high;
  j["frequencies"] = scheme == FrequencyScheme::equidistant ? "equidistant" : "seeded-uniform";
  j["workers"] = workers;
  j["record_every"] = record_every;
  j["gamma_resolution"] = gamma_resolution;
  j["bisect_steps"] = bisect_steps;
  j["gamma_cap"] = gamma_cap;
  j["majority_seeds"] = majority_seeds;
  j["anderson"] = anderson;
  j["max_iters"] = max_iters;
  j["out"] = out;
  return j;
}

SimulationOutcome simulate(double beta, double gamma, double kappa, const RunConfig& cfg,
                           std::uint64_t seed) {
  const auto model = simplified_model(beta);
  const EnsembleParams params(
      kappa, gamma, make_frequencies(cfg.n, gamma, cfg.scheme, seed ^ kFrequencyStream));
  const auto state0 = make_initial_conditions(cfg.n, cfg.ic_low, cfg.ic_high, seed);
  IntegratorConfig icfg;
  icfg.h = cfg.step;

  SimulationOutcome out;
  const auto last = integrate_observed(state0, params, model, icfg, cfg.t_end,
                                       [&](const EnsembleState& s) {
                                         out.max_deviation =
                                             std::max(out.max_deviation, order_d(s.x));
                                       });
  out.final = observe(last.x);
  out.verdict = sync_verdict(out.final.deviation, cfg.threshold);
  return out;
}

Verdict synchronized_at(double beta, double gamma, double kappa, const RunConfig& cfg) {
  std::size_t votes = 0;
  for (std::size_t k = 0; k < cfg.majority_seeds; ++k)
    if (simulate(beta, gamma, kappa, cfg, cfg.seed + k).verdict == Verdict::synchronized)
      ++votes;
  return 2 * votes > cfg.majority_seeds ? Verdict::synchronized : Verdict::desynchronized;
}

double gamma_max(double beta, double kappa, const RunConfig& cfg) {
  auto ok = [&](double g) {
    return synchronized_at(beta, g, kappa, cfg) == Verdict::synchronized;
  };
  if (!ok(0.0)) return 0.0;
  double good = 0.0;
  std::optional<double> bad;
  for (std::size_t k = 1;; ++k) {
    const double g = static_cast<double>(k) * cfg.gamma_resolution;
    if (g > cfg.gamma_cap) break;
    if (!ok(g)) {
      bad = g;
      break;
    }
    good = g;
  }
  if (!bad) return good;
  double hi = *bad;
  for (std::size_t i = 0; i < cfg.bisect_steps; ++i) {
    const double mid = 0.5 * (good + hi);
    (ok(mid) ? good : hi) = mid;
  }
  return good;
}

CommandResult cmd_kappa_star_curve(const RunConfig& cfg) {
  cfg.validate();
  require_grid(cfg.grid_beta, "beta grid");
  return run_rows({"beta", "kappa_star"}, cfg.grid_beta.size(), cfg.workers,
                  [&](std::size_t i) -> std::vector<std::string> {
                    const double b = cfg.grid_beta[i];
                    const auto k = kappa_star(simplified_model(b));
                    return {fmt(b), k.is_unbounded() ? "inf" : fmt(k.value())};
                  });
}

CommandResult cmd_h_map(const RunConfig& cfg) {
  cfg.validate();
  require_grid(cfg.grid_beta, "beta grid");
  require_grid(cfg.grid_kappa, "kappa grid");
  const std::size_t nk = cfg.grid_kappa.size();
  std::vector<CriticalCoupling> kstars(cfg.grid_beta.size(), CriticalCoupling::unbounded());
  parallel_for(cfg.grid_beta.size(), cfg.workers, [&](std::size_t i) {
    kstars[i] = kappa_star(simplified_model(cfg.grid_beta[i]));
  });
  return run_rows({"beta", "kappa", "H", "valid", "sign"}, cfg.grid_beta.size() * nk,
                  cfg.workers, [&](std::size_t idx) -> std::vector<std::string> {
                    const std::size_t bi = idx / nk;
                    const double b = cfg.grid_beta[bi];
                    const double k = cfg.grid_kappa[idx % nk];
                    const bool valid = k >= 0.0 && kstars[bi].admits(k);
                    if (!valid) return {fmt(b), fmt(k), "", "0", ""};
                    try {
                      const double h = h_integral(simplified_model(b), k, kstars[bi]);
                      const int sign = std::abs(h) <= 1e-9 ? 0 : (h > 0 ? 1 : -1);
                      return {fmt(b), fmt(k), fmt(h), "1", std::to_string(sign)};
                    } catch (const quad::QuadratureError&) {
                      return {fmt(b), fmt(k), "nan", "1", ""};
                    }
                  });
}

CommandResult cmd_sync_domain(const RunConfig& cfg) {
  cfg.validate();
  require_grid(cfg.grid_kappa, "kappa grid");
  const auto kstar = kappa_star(simplified_model(cfg.beta));
  for (double k : cfg.grid_kappa)
    if (!(k > 0.0) || !kstar.admits(k))
      throw std::invalid_argument("sync-domain: kappa grid must lie in (0, kappa_*(beta))");
  return run_rows({"kappa", "gamma_max"}, cfg.grid_kappa.size(), cfg.workers,
                  [&](std::size_t i) -> std::vector<std::string> {
                    const double k = cfg.grid_kappa[i];
                    return {fmt(k), fmt(gamma_max(cfg.beta, k, cfg))};
                  });
}

CommandResult cmd_desync_curve(const RunConfig& cfg) {
  cfg.validate();
  require_grid(cfg.grid_beta, "beta grid");
  for (double b : cfg.grid_beta)
    if (!kappa_star(simplified_model(b)).admits(cfg.kappa))
      throw std::invalid_argument("desync-curve: kappa must stay below kappa_*(beta) on the grid");
  return run_rows({"beta", "gamma_max"}, cfg.grid_beta.size(), cfg.workers,
                  [&](std::size_t i) -> std::vector<std::string> {
                    const double b = cfg.grid_beta[i];
                    return {fmt(b), fmt(gamma_max(b, cfg.kappa, cfg))};
                  });
}

CommandResult cmd_order_scan(const RunConfig& cfg) {
  cfg.validate();
  require_grid(cfg.grid_beta, "beta grid");
  require_grid(cfg.grid_gamma, "gamma grid");
  const std::size_t ng = cfg.grid_gamma.size();
  // gamma-major so each gamma row forms a contiguous r_X(beta) curve.
  return run_rows({"gamma", "beta", "r_X", "d_X"}, cfg.grid_beta.size() * ng, cfg.workers,
                  [&](std::size_t idx) -> std::vector<std::string> {
                    const double g = cfg.grid_gamma[idx / cfg.grid_beta.size()];
                    const double b = cfg.grid_beta[idx % cfg.grid_beta.size()];
                    const auto o = simulate(b, g, cfg.kappa, cfg, cfg.seed);
                    return {fmt(g), fmt(b), fmt(o.final.coherence), fmt(o.final.deviation)};
                  });
}

CommandResult cmd_timeseries(const RunConfig& cfg) {
  cfg.validate();
  const auto model = simplified_model(cfg.beta);
  const EnsembleParams params(cfg.kappa, cfg.gamma,
                              make_frequencies(cfg.n, cfg.gamma, cfg.scheme,
                                               cfg.seed ^ kFrequencyStream));
  const auto state0 = make_initial_conditions(cfg.n, cfg.ic_low, cfg.ic_high, cfg.seed);
  IntegratorConfig icfg;
  icfg.h = cfg.step;

  CommandResult result;
  result.table.columns = {"t", "d_X", "mu"};
  std::size_t counter = 0;
  EnsembleState last = state0;
  auto record = [&](const EnsembleState& s) {
    const auto o = observe(s.x);
    result.table.rows.push_back({fmt(s.t), fmt(o.deviation), fmt(o.mean)});
  };
  try {
    last = integrate_observed(state0, params, model, icfg, cfg.t_end,
                              [&](const EnsembleState& s) {
                                if (counter++ % cfg.record_every == 0) record(s);
                                last = s;
                              });
    if ((counter - 1) % cfg.record_every != 0) record(last);
  } catch (const NonFiniteState& e) {
    result.aborted = e.what();
    return result;
  }

  nlohmann::json snapshot;
  std::vector<double> phases(last.x.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    double p = std::fmod(last.x[i], kTwoPi);
    phases[i] = p < 0.0 ? p + kTwoPi : p;
  }
  snapshot["t"] = last.t;
  snapshot["omega"] = params.omega();
  snapshot["phase_mod_2pi"] = phases;
  snapshot["r_X"] = order_r(last.x);
  snapshot["d_X"] = order_d(last.x);
  result.extra["snapshot"] = snapshot;
  return result;
}

CommandResult cmd_certify(const RunConfig& cfg) {
  cfg.validate();
  require_grid(cfg.grid_gamma, "gamma grid");
  require_grid(cfg.grid_kappa, "kappa grid");
  const auto model = simplified_model(cfg.beta);
  const auto kstar = kappa_star(model);
  const std::size_t nk = cfg.grid_kappa.size();
  return run_rows(
      {"gamma", "kappa", "in_U", "D", "L", "max_delta", "condition8", "status"},
      cfg.grid_gamma.size() * nk, cfg.workers,
      [&](std::size_t idx) -> std::vector<std::string> {
        const double g = cfg.grid_gamma[idx / nk];
        const double k = cfg.grid_kappa[idx % nk];
        auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
        try {
          const auto c = certify_domain(model, g, k, kstar);
          const char* status = c.below_kstar ? "ok" : "above_kappa_star";
          return {fmt(g), fmt(k), c.in_U ? "1" : "0", opt(c.capacity), opt(c.gain),
                  opt(c.max_delta()), c.condition8 ? "1" : "0", status};
        } catch (const H3Failure&) {
          return {fmt(g), fmt(k), "0", "", "", "", "0", "h3_failure"};
        }
      });
}

nlohmann::json cmd_lock(const RunConfig& cfg) {
  cfg.validate();
  const auto model = simplified_model(cfg.beta);
  const auto cert = certify_domain(model, cfg.gamma, cfg.kappa);
  if (!cert.in_U)
    throw std::runtime_error("lock: (gamma, kappa) is not certified in U for this beta");
  const EnsembleParams params(cfg.kappa, cfg.gamma,
                              make_frequencies(cfg.n, cfg.gamma, cfg.scheme,
                                               cfg.seed ^ kFrequencyStream));
  IntegratorConfig icfg;
  icfg.h = cfg.step;
  LockingOptions opts;
  opts.anderson = cfg.anderson;
  opts.max_iters = cfg.max_iters;
  const auto sol = find_locked_solution(params, model, icfg, cert, opts);
  const auto bounds = return_time_bounds(params, model, cert);

  nlohmann::json report;
  report["solution"] = to_json(sol);
  report["return_time_bounds"] = {bounds.first, bounds.second};
  report["certificate"] = to_json(cert);
  report["omega_natural"] = params.omega();
  return report;
}

}  // namespace winfree::experiments
