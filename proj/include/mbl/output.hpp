#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mbl/experiments.hpp"

namespace mbl {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline std::string rows_to_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  out << "diagnostic,x,y,r,mean,stderr,n_valid,n_invalid\n";
  for (const ExperimentRow& row : rows) {
    out << detail::csv_escape(row.diagnostic) << ',';
    if (row.x) out << *row.x;
    out << ',';
    if (row.y) out << *row.y;
    out << ',';
    if (row.r) out << format_double(*row.r);
    out << ',';
    out << format_double(row.mean) << ',';
    out << (row.std_error ? format_double(*row.std_error) : "na") << ',';
    out << row.n_valid << ',' << row.n_invalid << '\n';
  }
  return out.str();
}

inline std::string rows_to_jsonl(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  for (const ExperimentRow& row : rows) {
    nlohmann::json j;
    j["diagnostic"] = row.diagnostic;
    j["x"] = row.x ? nlohmann::json(*row.x) : nlohmann::json(nullptr);
    j["y"] = row.y ? nlohmann::json(*row.y) : nlohmann::json(nullptr);
    j["r"] = row.r ? nlohmann::json(*row.r) : nlohmann::json(nullptr);
    j["mean"] = row.mean;
    j["stderr"] =
        row.std_error ? nlohmann::json(*row.std_error) : nlohmann::json(nullptr);
    j["n_valid"] = row.n_valid;
    j["n_invalid"] = row.n_invalid;
    out << j.dump() << '\n';
  }
  return out.str();
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["model"] = to_string(cfg.model);
  j["diagnostic"] = to_string(cfg.diagnostic);
  j["geometry"] = {{"n", cfg.n}, {"d", cfg.d}, {"L", cfg.L}};
  j["coefficients"] = {{"mu", cfg.mu_dist.describe()},
                       {"gamma", cfg.gamma_dist.describe()},
                       {"nu", cfg.nu_dist.describe()},
                       {"spring", cfg.spring_dist.describe()},
                       {"coupling", cfg.coupling}};
  nlohmann::json p;
  p["beta"] = cfg.beta ? nlohmann::json(*cfg.beta) : nlohmann::json(nullptr);
  p["window"] = cfg.window ? nlohmann::json({{"lo", cfg.window->lo},
                                             {"hi", cfg.window->hi}})
                           : nlohmann::json(nullptr);
  p["energies"] = cfg.energies;
  p["times"] = cfg.times;
  p["region_sizes"] = cfg.region_sizes;
  p["sum_convention"] = to_string(cfg.sum_convention);
  p["oracle_cap"] = cfg.oracle_cap;
  p["lyapunov_steps"] = cfg.lyapunov_steps;
  p["zeta"] = cfg.zeta ? nlohmann::json(*cfg.zeta) : nlohmann::json(nullptr);
  j["parameters"] = p;
  j["ensemble"] = {{"samples", cfg.n_samples}, {"seed", cfg.seed}};
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("model")) cfg.model = parse_model(j.at("model"));
    if (j.contains("diagnostic")) {
      cfg.diagnostic = parse_diagnostic(j.at("diagnostic"));
    }
    if (j.contains("geometry")) {
      const auto& g = j.at("geometry");
      if (g.contains("n")) cfg.n = g.at("n").get<int>();
      if (g.contains("d")) cfg.d = g.at("d").get<int>();
      if (g.contains("L")) cfg.L = g.at("L").get<int>();
    }
    if (j.contains("coefficients")) {
      const auto& c = j.at("coefficients");
      if (c.contains("mu")) {
        cfg.mu_dist = parse_distribution(c.at("mu").get<std::string>());
      }
      if (c.contains("gamma")) {
        cfg.gamma_dist = parse_distribution(c.at("gamma").get<std::string>());
      }
      if (c.contains("nu")) {
        cfg.nu_dist = parse_distribution(c.at("nu").get<std::string>());
      }
      if (c.contains("spring")) {
        cfg.spring_dist = parse_distribution(c.at("spring").get<std::string>());
      }
      if (c.contains("coupling")) {
        cfg.coupling = c.at("coupling").get<double>();
      }
    }
    if (j.contains("parameters")) {
      const auto& p = j.at("parameters");
      if (p.contains("beta") && !p.at("beta").is_null()) {
        cfg.beta = p.at("beta").get<double>();
      }
      if (p.contains("window") && !p.at("window").is_null()) {
        cfg.window = make_energy_window(p.at("window").at("lo").get<double>(),
                                        p.at("window").at("hi").get<double>());
      }
      if (p.contains("energies")) {
        cfg.energies = p.at("energies").get<std::vector<double>>();
      }
      if (p.contains("times")) {
        cfg.times = p.at("times").get<std::vector<double>>();
      }
      if (p.contains("region_sizes")) {
        cfg.region_sizes = p.at("region_sizes").get<std::vector<int>>();
      }
      if (p.contains("sum_convention")) {
        cfg.sum_convention =
            parse_sum_convention(p.at("sum_convention").get<std::string>());
      }
      if (p.contains("oracle_cap")) {
        cfg.oracle_cap = p.at("oracle_cap").get<int>();
      }
      if (p.contains("lyapunov_steps")) {
        cfg.lyapunov_steps = p.at("lyapunov_steps").get<long>();
      }
      if (p.contains("zeta")) {
        if (p.at("zeta").is_null()) cfg.zeta.reset();
        else cfg.zeta = p.at("zeta").get<double>();
      }
    }
    if (j.contains("ensemble")) {
      const auto& e = j.at("ensemble");
      if (e.contains("samples")) cfg.n_samples = e.at("samples").get<long>();
      if (e.contains("seed")) cfg.seed = e.at("seed").get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("config", ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("config", ex.what());
  }
  return cfg;
}

// Run metadata: the fully resolved configuration plus result summary, enough
// to reproduce the run exactly. Deliberately excludes wall-clock timestamps
// so identical runs produce identical files.
inline nlohmann::json make_metadata(const ExperimentConfig& cfg,
                                    const ExperimentResult& result,
                                    int n_threads) {
  nlohmann::json meta;
  meta["config"] = config_to_json(cfg);
  meta["threads"] = n_threads;
  meta["versions"] = {
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"format", 1}};
  meta["n_rows"] = result.rows.size();
  meta["n_invalid"] = result.n_invalid;
  meta["warnings"] = result.warnings;
  if (result.decay_fit) {
    const DecayFit& f = *result.decay_fit;
    meta["decay_fit"] = {{"C", f.C},
                         {"eta", f.eta},
                         {"zeta", f.zeta},
                         {"residual", f.residual},
                         {"eta_stderr", f.eta_stderr},
                         {"r_min", f.r_range.first},
                         {"r_max", f.r_range.second},
                         {"n_points", f.n_points},
                         {"n_floored", f.n_floored}};
  }
  if (result.trend_fit) {
    const LinearFit& f = *result.trend_fit;
    meta["trend_fit"] = {{"slope", f.slope},
                         {"intercept", f.intercept},
                         {"slope_stderr", f.slope_stderr},
                         {"residual_rms", f.residual_rms},
                         {"n_points", f.n_points}};
  }
  return meta;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << body;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace mbl
