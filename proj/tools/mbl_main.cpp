#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbl/experiments.hpp"
#include "mbl/output.hpp"

namespace {

std::string default_output_name(const mbl::ExperimentConfig& cfg) {
  return "mbl_" + mbl::to_string(cfg.model) + "_" +
         mbl::to_string(cfg.diagnostic) + ".csv";
}

std::filesystem::path resolve_output_path(const std::string& out) {
  std::filesystem::path path(out);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("MBL_OUTPUT_DIR")) {
      path = std::filesystem::path(dir) / path;
    }
  }
  return path;
}

void print_summary(const mbl::ExperimentConfig& cfg,
                   const mbl::ExperimentResult& result,
                   const std::filesystem::path& table_path) {
  std::cout << "model=" << mbl::to_string(cfg.model)
            << " diagnostic=" << mbl::to_string(cfg.diagnostic)
            << " rows=" << result.rows.size()
            << " invalid_samples=" << result.n_invalid << "\n";
  std::cout << "table: " << table_path.string() << "\n";
  if (result.decay_fit) {
    const mbl::DecayFit& f = *result.decay_fit;
    std::cout << "decay fit: C=" << mbl::format_double(f.C)
              << " eta=" << mbl::format_double(f.eta)
              << " zeta=" << mbl::format_double(f.zeta)
              << " residual=" << mbl::format_double(f.residual)
              << " eta_stderr=" << mbl::format_double(f.eta_stderr)
              << " points=" << f.n_points << " floored=" << f.n_floored
              << "\n";
  }
  if (result.trend_fit) {
    const mbl::LinearFit& f = *result.trend_fit;
    std::cout << "trend fit: slope=" << mbl::format_double(f.slope)
              << " intercept=" << mbl::format_double(f.intercept)
              << " slope_stderr=" << mbl::format_double(f.slope_stderr)
              << " residual_rms=" << mbl::format_double(f.residual_rms)
              << "\n";
  }
  for (const std::string& w : result.warnings) {
    std::cout << "warning: " << w << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disordered spin chain and oscillator lattice experiments"};
  app.require_subcommand(1);
  CLI::App* run = app.add_subcommand("run", "Run one configured experiment");

  std::string config_path;
  std::string model_str, diagnostic_str;
  int n = 0, d = 0, L = 0;
  std::string mu_str, gamma_str, nu_str, spring_str;
  double coupling = 0.0, beta = 0.0, window_lo = 0.0, window_hi = 0.0;
  std::vector<double> energies, times;
  std::vector<int> regions;
  std::string sum_convention_str;
  int oracle_cap = 0;
  long lyapunov_steps = 0;
  double zeta = 0.0;
  bool free_zeta = false;
  long n_samples = 0;
  std::uint64_t seed = 0;
  std::string out;
  int n_threads = static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;

  run->add_option("--config", config_path, "Structured config file (JSON)");
  auto* o_model = run->add_option("--model", model_str, "xy|ising|oscillator");
  auto* o_diag = run->add_option(
      "--diagnostic", diagnostic_str,
      "dynloc|gs-corr|thermal-corr|negativity|entropy|lyapunov|oracle-check");
  auto* o_n = run->add_option("--n", n, "Chain length (xy, ising)");
  auto* o_d = run->add_option("--d", d, "Lattice dimension (oscillator)");
  auto* o_L = run->add_option("--L", L, "Lattice half-width (oscillator)");
  auto* o_mu = run->add_option("--mu-dist", mu_str, "Hopping law");
  auto* o_gamma = run->add_option("--gamma-dist", gamma_str, "Anisotropy law");
  auto* o_nu = run->add_option("--nu-dist", nu_str, "Field law");
  auto* o_spring = run->add_option("--spring-dist", spring_str, "Spring law");
  auto* o_coupling = run->add_option("--coupling", coupling, "Edge coupling");
  auto* o_beta = run->add_option("--beta", beta, "Inverse temperature");
  auto* o_wlo = run->add_option("--window-lo", window_lo, "Energy window low");
  auto* o_whi = run->add_option("--window-hi", window_hi, "Energy window high");
  auto* o_energies = run->add_option("--energies", energies, "Energy grid");
  auto* o_times = run->add_option("--times", times, "Time grid");
  auto* o_regions = run->add_option("--regions", regions, "Region sides");
  auto* o_conv = run->add_option("--sum-convention", sum_convention_str,
                                 "interior|as_written");
  auto* o_cap = run->add_option("--oracle-cap", oracle_cap,
                                "Max chain length for dense oracles");
  auto* o_steps =
      run->add_option("--lyapunov-steps", lyapunov_steps, "Transfer steps");
  auto* o_zeta = run->add_option("--zeta", zeta, "Fixed stretch exponent");
  run->add_flag("--free-zeta", free_zeta, "Scan the stretch exponent");
  auto* o_samples = run->add_option("--samples", n_samples, "Disorder samples");
  auto* o_seed = run->add_option("--seed", seed, "Master seed");
  auto* o_out = run->add_option("--out", out, "Output table (.csv or .jsonl)");
  run->add_option("--threads", n_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    mbl::ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw mbl::ConfigError("config", "cannot read " + config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& ex) {
        throw mbl::ConfigError("config", ex.what());
      }
      if (o_out->count() == 0 && j.contains("output") &&
          j.at("output").contains("path")) {
        out = j.at("output").at("path").get<std::string>();
      }
      cfg = mbl::config_from_json(j);
    }

    if (o_model->count() > 0) cfg.model = mbl::parse_model(model_str);
    if (o_diag->count() > 0) {
      cfg.diagnostic = mbl::parse_diagnostic(diagnostic_str);
    }
    if (o_n->count() > 0) cfg.n = n;
    if (o_d->count() > 0) cfg.d = d;
    if (o_L->count() > 0) cfg.L = L;
    try {
      if (o_mu->count() > 0) cfg.mu_dist = mbl::parse_distribution(mu_str);
      if (o_gamma->count() > 0) {
        cfg.gamma_dist = mbl::parse_distribution(gamma_str);
      }
      if (o_nu->count() > 0) cfg.nu_dist = mbl::parse_distribution(nu_str);
      if (o_spring->count() > 0) {
        cfg.spring_dist = mbl::parse_distribution(spring_str);
      }
    } catch (const std::invalid_argument& ex) {
      throw mbl::ConfigError("distribution", ex.what());
    }
    if (o_coupling->count() > 0) cfg.coupling = coupling;
    if (o_beta->count() > 0) cfg.beta = beta;
    if (o_wlo->count() > 0 || o_whi->count() > 0) {
      if (o_wlo->count() == 0 || o_whi->count() == 0) {
        throw mbl::ConfigError("window",
                               "both --window-lo and --window-hi are needed");
      }
      try {
        cfg.window = mbl::make_energy_window(window_lo, window_hi);
      } catch (const std::invalid_argument& ex) {
        throw mbl::ConfigError("window", ex.what());
      }
    }
    if (o_energies->count() > 0) cfg.energies = energies;
    if (o_times->count() > 0) cfg.times = times;
    if (o_regions->count() > 0) cfg.region_sizes = regions;
    if (o_conv->count() > 0) {
      try {
        cfg.sum_convention = mbl::parse_sum_convention(sum_convention_str);
      } catch (const std::invalid_argument& ex) {
        throw mbl::ConfigError("sum-convention", ex.what());
      }
    }
    if (o_cap->count() > 0) cfg.oracle_cap = oracle_cap;
    if (o_steps->count() > 0) cfg.lyapunov_steps = lyapunov_steps;
    if (o_zeta->count() > 0) cfg.zeta = zeta;
    if (free_zeta) cfg.zeta.reset();
    if (o_samples->count() > 0) cfg.n_samples = n_samples;
    if (o_seed->count() > 0) cfg.seed = seed;
    if (n_threads < 1) {
      throw mbl::ConfigError("threads", "need at least one worker");
    }

    mbl::validate_config(cfg);

    const mbl::ExperimentResult result = mbl::run_experiment(cfg, n_threads);

    if (out.empty()) out = default_output_name(cfg);
    const std::filesystem::path table_path = resolve_output_path(out);
    if (table_path.has_parent_path()) {
      std::filesystem::create_directories(table_path.parent_path());
    }
    const bool jsonl = table_path.extension() == ".jsonl";
    mbl::write_text_file(table_path.string(),
                         jsonl ? mbl::rows_to_jsonl(result.rows)
                               : mbl::rows_to_csv(result.rows));
    const nlohmann::json meta = mbl::make_metadata(cfg, result, n_threads);
    mbl::write_text_file(table_path.string() + ".meta.json",
                         meta.dump(2) + "\n");
    print_summary(cfg, result, table_path);
    return 0;
  } catch (const mbl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mbl::SingularSpectrumError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
