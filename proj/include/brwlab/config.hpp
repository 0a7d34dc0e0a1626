#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/perpetuity.hpp"
#include "brwlab/regvar.hpp"
#include "brwlab/walkrenew.hpp"

namespace brwlab {

enum class Experiment { martingale, series, renewal, sizebias, perpetuity, walk, moments, regvar_check };

std::string_view to_string(Experiment e);
// ConfigError for unknown names.
Experiment parse_experiment(std::string_view name);
const std::vector<Experiment>& all_experiments();

struct Params {
  std::size_t n_max = 10;  // martingale depth
  std::size_t m_max = 30;  // series
  std::size_t depth = 60;  // series proxy depth N
  std::vector<double> xs = {6.0, 12.0, 24.0};  // renewal thresholds
  std::vector<std::size_t> identity_n = {1, 2, 3};
  std::size_t mu_replicas = 100000;
  std::uint64_t m = 1000000;  // regvar-check sum length
  std::vector<std::string> families;
  double log_x_km = 25.0;
  double log_x_haan = 20.0;
  double tail_lo = 2.0;
  double tail_hi = 6.0;
  double ladder_x = 1.0;
  std::size_t moment_depth = 30;
  std::size_t moment_replicas = 0;  // 0: use the scenario replicas
  bool expect_divergent = false;
};

struct Tolerances {
  double sigma = 3.0;
  double ks = 0.02;
  double stabilizing = 0.95;
  double relative_floor = 0.01;
  double renewal_band = 0.2;
  double hat_gap = 0.1;
  double km_band = 0.15;
  double haan_band = 0.1;
  double kappa_band = 0.1;
  double karamata_band = 0.01;
  double slope = 0.1;
};

struct Scenario {
  std::string name;
  std::string description;
  Experiment experiment = Experiment::martingale;
  std::optional<BranchingModel> model;
  SimOptions sim;
  bool non_arithmetic = false;
  std::optional<PerpetuitySpec> perpetuity;
  std::optional<WalkSpec> walk;
  std::optional<RegVarFn> a;
  std::optional<RegVarFn> b;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  Params params;
  Tolerances tol;
};

// JSON text with comments allowed. Errors are ConfigError with
// "origin:line: field: message".
Scenario parse_scenario(std::string_view text, std::string_view origin = "<config>");
Scenario load_scenario(const std::string& path);

// Canonical JSON text; parse_scenario(dump_scenario(s)) reproduces s.
std::string dump_scenario(const Scenario& s);

// Throws ConfigError when the scenario lacks the blocks `e` needs.
void check_runnable(const Scenario& s, Experiment e);

}  // namespace brwlab
