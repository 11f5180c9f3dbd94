#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "winfree/csv.hpp"
#include "winfree/model.hpp"
#include "winfree/observables.hpp"

namespace winfree::experiments {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Parses a real expression such as "1.5", "pi/2-0.25" or "-3e-2*pi".
double parse_real(std::string_view text);

/// "a:b:n" gives n equally spaced points from a to b inclusive; otherwise a
/// comma-separated list of expressions.
std::vector<double> parse_grid(std::string_view text);

/// Runs body(i) for i in [0, count) on up to `workers` threads pulling from a
/// shared counter. The first exception is rethrown after all threads join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

struct RunConfig {
  double beta = 0.0;
  std::size_t n = 100;
  double kappa = 0.6;
  double gamma = 0.0;
  std::vector<double> grid_beta;
  std::vector<double> grid_kappa;
  std::vector<double> grid_gamma;
  double t_end = 1500.0;
  double step = 1e-2;
  std::uint64_t seed = 1;
  double threshold = kDefaultSyncThreshold;
  double ic_low = -std::numbers::pi / 2;
  double ic_high = std::numbers::pi / 2;
  FrequencyScheme scheme = FrequencyScheme::equidistant;
  std::size_t workers = 1;
  std::size_t record_every = 100;
  // gamma scan
  double gamma_resolution = 1e-3;
  std::size_t bisect_steps = 10;
  double gamma_cap = 0.5;
  std::size_t majority_seeds = 1;  // > 1 enables the multi-seed majority vote
  // locking
  bool anderson = false;
  std::size_t max_iters = 5000;
  std::string out;

  /// Throws std::invalid_argument on empty or non-finite grids, T <= 0, ...
  void validate() const;
  nlohmann::json to_json() const;
};

/// Final observables of one seeded simulation of the simplified model.
struct SimulationOutcome {
  Observables final;
  double max_deviation = 0.0;  // max over all steps of d_X(t)
  Verdict verdict = Verdict::desynchronized;
};

SimulationOutcome simulate(double beta, double gamma, double kappa, const RunConfig& cfg,
                           std::uint64_t seed);

/// Verdict of the seeded run, or the majority over cfg.majority_seeds
/// consecutive seeds.
Verdict synchronized_at(double beta, double gamma, double kappa, const RunConfig& cfg);

/// Largest gamma whose run is synchronized: upward scan in steps of
/// cfg.gamma_resolution up to cfg.gamma_cap, then cfg.bisect_steps bisections
/// of the first failing bracket. Returns 0 when even the first step fails
/// and gamma = 0 is not synchronized.
double gamma_max(double beta, double kappa, const RunConfig& cfg);

/// Rows of one subcommand plus per-row wall-clock seconds, kept out of the
/// CSV body so bodies stay byte-identical across runs.
struct CommandResult {
  csv::Table table;
  std::vector<double> row_seconds;
  nlohmann::json extra = nlohmann::json::object();
  std::optional<std::string> aborted;  // partial output reason
};

CommandResult cmd_kappa_star_curve(const RunConfig& cfg);
CommandResult cmd_h_map(const RunConfig& cfg);
CommandResult cmd_sync_domain(const RunConfig& cfg);
CommandResult cmd_desync_curve(const RunConfig& cfg);
CommandResult cmd_order_scan(const RunConfig& cfg);
CommandResult cmd_timeseries(const RunConfig& cfg);
CommandResult cmd_certify(const RunConfig& cfg);

/// Structured locked-solution report (JSON). Throws on certificate failure
/// or non-convergence.
nlohmann::json cmd_lock(const RunConfig& cfg);

}  // namespace winfree::experiments
