// Command-line front end: one subcommand per experiment, CSV + sidecar
// metadata output, optional JSON config file mirroring the flags.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "winfree/experiments.hpp"
#include "winfree/theory.hpp"

namespace ex = winfree::experiments;

namespace {

const std::vector<std::string> kCommands = {"kappa-star",   "h-map",       "sync-domain",
                                            "desync-curve", "order-scan",  "timeseries",
                                            "certify",      "lock"};

// String-valued flags that accept expressions ("pi/2-0.5") or grids.
struct TextFlags {
  std::string beta = "0";
  std::string gamma = "0";
  std::string kappa = "0.6";
  std::string grid_beta;
  std::string grid_kappa;
  std::string grid_gamma;
  std::string ic_low = "-pi/2";
  std::string ic_high = "pi/2";
  std::string frequencies = "equidistant";
};

struct Command {
  CLI::App* app = nullptr;
  ex::RunConfig cfg;
  TextFlags text;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// JSON config -> flag tokens. Keys are flag names without the leading dashes.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  const auto j = nlohmann::json::parse(in);
  if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
      continue;
    }
    tokens.push_back(flag);
    if (value.is_string()) {
      tokens.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      tokens.push_back(joined);
    } else {
      tokens.push_back(value.dump());
    }
  }
  return tokens;
}

// Splices config-file flags right after the subcommand so command-line flags,
// which come later, win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (config.empty()) return args;
  const auto tokens = config_tokens(config);
  auto sub = std::find_first_of(args.begin(), args.end(), kCommands.begin(), kCommands.end());
  if (sub == args.end()) throw std::runtime_error("--config needs a subcommand");
  args.insert(sub + 1, tokens.begin(), tokens.end());
  return args;
}

std::vector<double> auto_kappa_grid(double beta, std::size_t count) {
  const auto kstar = winfree::kappa_star(winfree::simplified_model(beta));
  const double top = kstar.is_unbounded() ? 2.0 : kstar.value();
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = top * static_cast<double>(i + 1) / static_cast<double>(count + 1);
  return grid;
}

void resolve(Command& c) {
  auto& cfg = c.cfg;
  cfg.beta = ex::parse_real(c.text.beta);
  cfg.gamma = ex::parse_real(c.text.gamma);
  cfg.kappa = ex::parse_real(c.text.kappa);
  cfg.ic_low = ex::parse_real(c.text.ic_low);
  cfg.ic_high = ex::parse_real(c.text.ic_high);
  if (!c.text.grid_beta.empty()) cfg.grid_beta = ex::parse_grid(c.text.grid_beta);
  if (!c.text.grid_gamma.empty()) cfg.grid_gamma = ex::parse_grid(c.text.grid_gamma);
  if (c.text.grid_kappa == "auto")
    cfg.grid_kappa = auto_kappa_grid(cfg.beta, 19);
  else if (!c.text.grid_kappa.empty())
    cfg.grid_kappa = ex::parse_grid(c.text.grid_kappa);
  if (c.text.frequencies == "equidistant")
    cfg.scheme = winfree::FrequencyScheme::equidistant;
  else if (c.text.frequencies == "seeded-uniform")
    cfg.scheme = winfree::FrequencyScheme::seeded_uniform;
  else
    throw std::invalid_argument("--frequencies must be equidistant or seeded-uniform");
}

void add_simulation_flags(Command& c) {
  auto* app = c.app;
  app->add_option("--n", c.cfg.n, "Number of oscillators")->capture_default_str();
  app->add_option("--t-end", c.cfg.t_end, "Horizon T")->capture_default_str();
  app->add_option("--step", c.cfg.step, "RK4 step h")->capture_default_str();
  app->add_option("--seed", c.cfg.seed, "RNG seed")->capture_default_str();
  app->add_option("--threshold", c.cfg.threshold, "Synchronization threshold on d_X(T)")
      ->capture_default_str();
  app->add_option("--ic-low", c.text.ic_low, "Lower end of the initial phase interval")
      ->capture_default_str();
  app->add_option("--ic-high", c.text.ic_high, "Upper end of the initial phase interval")
      ->capture_default_str();
  app->add_option("--frequencies", c.text.frequencies, "equidistant | seeded-uniform")
      ->capture_default_str();
}

void add_scan_flags(Command& c) {
  auto* app = c.app;
  app->add_option("--gamma-resolution", c.cfg.gamma_resolution, "Coarse gamma step")
      ->capture_default_str();
  app->add_option("--bisect-steps", c.cfg.bisect_steps, "Bisection steps after the coarse scan")
      ->capture_default_str();
  app->add_option("--gamma-cap", c.cfg.gamma_cap, "Largest gamma tried")->capture_default_str();
  app->add_option("--majority-seeds", c.cfg.majority_seeds,
                  "Seeds per verdict (majority vote when > 1)")
      ->capture_default_str();
}

void add_output_flags(Command& c) {
  c.app->add_option("--out", c.cfg.out, "Output path (stdout when omitted)");
  c.app->add_option("--workers", c.cfg.workers, "Worker threads")->capture_default_str();
}

int emit_table(const std::string& command, const Command& c, const ex::CommandResult& result,
               const std::string& started, double elapsed) {
  nlohmann::json header;
  header["tool"] = std::string("winfree ") + std::string(ex::kToolVersion);
  header["command"] = command;
  header["config"] = c.cfg.to_json();
  header["wall_clock"] = started;
  if (result.aborted) header["status"] = "aborted: " + *result.aborted;

  if (c.cfg.out.empty()) {
    winfree::csv::write(std::cout, result.table, header);
  } else {
    std::ofstream out(c.cfg.out);
    if (!out) throw std::runtime_error("cannot write " + c.cfg.out);
    winfree::csv::write(out, result.table, header);

    nlohmann::json meta = header;
    meta["elapsed_seconds"] = elapsed;
    meta["row_seconds"] = result.row_seconds;
    meta["rows"] = result.table.rows.size();
    for (const auto& [k, v] : result.extra.items()) meta[k] = v;
    std::ofstream side(c.cfg.out + ".meta.json");
    side << meta.dump(2) << '\n';

    if (result.extra.contains("snapshot")) {
      const auto& snap = result.extra["snapshot"];
      std::ofstream snapshot(c.cfg.out + ".snapshot.csv");
      snapshot << "# r_X: " << winfree::csv::format_number(snap["r_X"].get<double>()) << '\n';
      snapshot << "# t: " << winfree::csv::format_number(snap["t"].get<double>()) << '\n';
      snapshot << "i,omega,phase_mod_2pi\n";
      const auto& omega = snap["omega"];
      const auto& phase = snap["phase_mod_2pi"];
      for (std::size_t i = 0; i < phase.size(); ++i)
        snapshot << i << ',' << winfree::csv::format_number(omega[i].get<double>()) << ','
                 << winfree::csv::format_number(phase[i].get<double>()) << '\n';
    }
  }
  return result.aborted ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Winfree mean-field oscillator toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::map<std::string, Command> cmds;
  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    auto& c = cmds[name];
    c.app = app.add_subcommand(name, help);
    c.app->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    return c;
  };

  {
    auto& c = make("kappa-star", "Critical coupling kappa_*(beta) along a beta grid");
    c.text.grid_beta = "0:pi:181";
    c.app->add_option("--grid-beta", c.text.grid_beta, "beta grid (a:b:n or list)")->capture_default_str();
    add_output_flags(c);
  }
  {
    auto& c = make("h-map", "Sign map of the synchronization integral H_kappa(beta)");
    c.text.grid_beta = "0:pi:91";
    c.text.grid_kappa = "0:4:81";
    c.app->add_option("--grid-beta", c.text.grid_beta, "beta grid")->capture_default_str();
    c.app->add_option("--grid-kappa", c.text.grid_kappa, "kappa grid")->capture_default_str();
    add_output_flags(c);
  }
  {
    auto& c = make("sync-domain", "Largest synchronized gamma for each kappa at fixed beta");
    c.text.grid_kappa = "auto";
    c.cfg.t_end = 1500.0;
    c.app->add_option("--beta", c.text.beta, "Phase offset beta")->capture_default_str();
    c.app->add_option("--grid-kappa", c.text.grid_kappa, "kappa grid ('auto': 19 points in (0, kappa_*))")
        ->capture_default_str();
    add_simulation_flags(c);
    add_scan_flags(c);
    add_output_flags(c);
  }
  {
    auto& c = make("desync-curve", "Largest synchronized gamma along a beta grid at fixed kappa");
    c.text.grid_beta = "0:pi:41";
    c.cfg.t_end = 3e4;
    c.app->add_option("--kappa", c.text.kappa, "Coupling strength")->capture_default_str();
    c.app->add_option("--grid-beta", c.text.grid_beta, "beta grid")->capture_default_str();
    add_simulation_flags(c);
    add_scan_flags(c);
    add_output_flags(c);
  }
  {
    auto& c = make("order-scan", "Order parameter r_X(beta) at T for several gamma");
    c.text.grid_beta = "0:pi:61";
    c.text.grid_gamma = "0,0.011,0.0412";
    c.cfg.t_end = 3000.0;
    c.app->add_option("--kappa", c.text.kappa, "Coupling strength")->capture_default_str();
    c.app->add_option("--grid-beta", c.text.grid_beta, "beta grid")->capture_default_str();
    c.app->add_option("--grid-gamma", c.text.grid_gamma, "gamma values")->capture_default_str();
    add_simulation_flags(c);
    add_output_flags(c);
  }
  {
    auto& c = make("timeseries", "d_X(t) and mean(t) of one run plus a final circle snapshot");
    c.text.gamma = "0.0412";
    c.text.ic_low = "-pi";
    c.text.ic_high = "pi";
    c.cfg.t_end = 3e4;
    c.app->add_option("--beta", c.text.beta, "Phase offset beta")->capture_default_str();
    c.app->add_option("--gamma", c.text.gamma, "Spectrum half-width")->capture_default_str();
    c.app->add_option("--kappa", c.text.kappa, "Coupling strength")->capture_default_str();
    c.app->add_option("--record-every", c.cfg.record_every, "Steps between recorded rows")
        ->capture_default_str();
    add_simulation_flags(c);
    add_output_flags(c);
  }
  {
    auto& c = make("certify", "Certified synchronization domain on a (gamma, kappa) grid");
    c.text.grid_gamma = "1e-7:1e-4:20";
    c.text.grid_kappa = "auto";
    c.app->add_option("--beta", c.text.beta, "Phase offset beta")->capture_default_str();
    c.app->add_option("--grid-gamma", c.text.grid_gamma, "gamma grid")->capture_default_str();
    c.app->add_option("--grid-kappa", c.text.grid_kappa, "kappa grid ('auto': 19 points in (0, kappa_*))")
        ->capture_default_str();
    add_output_flags(c);
  }
  {
    auto& c = make("lock", "Locked periodic solution at a certified (gamma, kappa)");
    c.text.gamma = "1e-6";
    c.text.kappa = "0.3";
    c.cfg.n = 10;
    c.app->add_option("--beta", c.text.beta, "Phase offset beta")->capture_default_str();
    c.app->add_option("--gamma", c.text.gamma, "Spectrum half-width")->capture_default_str();
    c.app->add_option("--kappa", c.text.kappa, "Coupling strength")->capture_default_str();
    c.app->add_option("--n", c.cfg.n, "Number of oscillators")->capture_default_str();
    c.app->add_option("--step", c.cfg.step, "RK4 step h")->capture_default_str();
    c.app->add_option("--seed", c.cfg.seed, "Seed for seeded-uniform frequencies")->capture_default_str();
    c.app->add_option("--frequencies", c.text.frequencies, "equidistant | seeded-uniform")
        ->capture_default_str();
    c.app->add_option("--max-iters", c.cfg.max_iters, "Poincare iterations")->capture_default_str();
    c.app->add_flag("--anderson", c.cfg.anderson, "Anderson-accelerate the fixed-point iteration");
    c.app->add_option("--out", c.cfg.out, "Report path (stdout when omitted)");
  }

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  auto& c = cmds.at(command);
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    resolve(c);
    if (command == "lock") {
      auto report = ex::cmd_lock(c.cfg);
      report["tool"] = std::string("winfree ") + std::string(ex::kToolVersion);
      report["config"] = c.cfg.to_json();
      report["wall_clock"] = started;
      if (c.cfg.out.empty()) {
        std::cout << report.dump(2) << '\n';
      } else {
        std::ofstream(c.cfg.out) << report.dump(2) << '\n';
      }
      return 0;
    }
    ex::CommandResult result;
    if (command == "kappa-star") result = ex::cmd_kappa_star_curve(c.cfg);
    else if (command == "h-map") result = ex::cmd_h_map(c.cfg);
    else if (command == "sync-domain") result = ex::cmd_sync_domain(c.cfg);
    else if (command == "desync-curve") result = ex::cmd_desync_curve(c.cfg);
    else if (command == "order-scan") result = ex::cmd_order_scan(c.cfg);
    else if (command == "timeseries") result = ex::cmd_timeseries(c.cfg);
    else if (command == "certify") result = ex::cmd_certify(c.cfg);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return emit_table(command, c, result, started, elapsed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
