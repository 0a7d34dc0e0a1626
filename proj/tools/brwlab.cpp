// brwlab: experiment runner over scenario configs.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "brwlab/config.hpp"
#include "brwlab/error.hpp"
#include "brwlab/gallery.hpp"
#include "brwlab/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr int kVerdictFailure = 3;

int list_gallery(const std::string& write_dir) {
  for (const auto& g : brwlab::gallery()) {
    auto s = brwlab::parse_scenario(g.text, g.name);
    std::cout << g.name << "\t" << brwlab::to_string(s.experiment) << "\t" << s.description << "\n";
    if (!write_dir.empty()) {
      std::filesystem::create_directories(write_dir);
      std::ofstream out(std::filesystem::path(write_dir) / (g.name + ".cfg"), std::ios::binary);
      out << g.text;
      if (!out) throw brwlab::Error("cannot write gallery file in " + write_dir);
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching random walk experiment runner"};
  std::vector<std::string> command;
  std::string config, out = "brwlab_out", family, write_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::uint64_t> m;
  unsigned workers = 1;
  bool acceptance = false;
  app.add_option("command", command,
                 "Experiment (martingale, series, renewal, sizebias, perpetuity, walk, moments, regvar-check), "
                 "'run [experiment]', 'gallery' or 'validate'")
      ->required()
      ->expected(1, 2);
  app.add_option("--config", config, "Scenario config file");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--replicas", replicas, "Replica count")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory (BRWLAB_OUT overrides)");
  app.add_option("--workers", workers, "Worker threads; 0 uses every core");
  app.add_option("--family", family, "Regularly varying family for regvar-check, e.g. b:x^2");
  app.add_option("--m", m, "Sum length for regvar-check")->check(CLI::PositiveNumber);
  app.add_option("--write", write_dir, "With 'gallery': write the configs into this directory");
  app.add_flag("--acceptance", acceptance, "Exit with status 3 when a verdict fails");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (const char* env = std::getenv("BRWLAB_OUT"); env && *env) out = env;

  brwlab::Scenario scenario;
  brwlab::Experiment experiment;
  try {
    std::string head = command[0];
    if (head == "gallery") return list_gallery(write_dir);
    if (head == "validate") {
      if (config.empty()) throw brwlab::ConfigError("validate needs --config");
      auto s = brwlab::load_scenario(config);
      std::cout << config << ": ok (" << s.name << ", " << brwlab::to_string(s.experiment) << ")\n";
      return kOk;
    }
    std::optional<std::string> name;
    if (head == "run") {
      if (command.size() == 2) name = command[1];
    } else {
      if (command.size() != 1) throw brwlab::ConfigError("unexpected argument '" + command[1] + "'");
      name = head;
    }
    if (!config.empty()) {
      scenario = brwlab::load_scenario(config);
    } else if (name == "regvar-check" && !family.empty()) {
      scenario.name = "regvar-check";
      scenario.experiment = brwlab::Experiment::regvar_check;
    } else {
      throw brwlab::ConfigError("missing --config");
    }
    experiment = name ? brwlab::parse_experiment(*name) : scenario.experiment;
    if (!family.empty()) {
      brwlab::parse_regvar(family);
      scenario.params.families = {family};
      scenario.a.reset();
      scenario.b.reset();
    }
    if (m) scenario.params.m = *m;
    brwlab::RunOptions opt;
    opt.out = out;
    opt.workers = workers;
    opt.seed = seed;
    opt.replicas = replicas;
    auto res = brwlab::run_experiment(scenario, experiment, opt);
    std::cout << scenario.name << " " << brwlab::to_string(experiment) << " -> " << res.dir.string() << "\n";
    for (const auto& v : res.verdicts)
      std::cout << "  " << (v.pass ? "pass" : "FAIL") << "  " << v.name << " = " << brwlab::format_number(v.value)
                << " (threshold " << brwlab::format_number(v.threshold) << ")\n";
    if (!res.complete) {
      std::cerr << "brwlab: runtime error: " << res.error << " (partial manifest written)\n";
      return kRuntimeError;
    }
    if (acceptance && !res.pass()) return kVerdictFailure;
    return kOk;
  } catch (const brwlab::ConfigError& e) {
    std::cerr << "brwlab: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "brwlab: runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
}
