#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "brwlab/artifacts.hpp"
#include "brwlab/config.hpp"

namespace brwlab {

struct RunOptions {
  std::filesystem::path out = "brwlab_out";
  unsigned workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
};

struct Verdict {
  std::string name;
  bool pass;
  double value;
  double threshold;
};

struct RunResult {
  std::filesystem::path dir;  // out / scenario / experiment
  bool complete = false;
  std::string error;  // set when a module failed; the manifest is partial
  std::vector<Verdict> verdicts;
  std::vector<FileEntry> files;
  std::string summary;  // summary.json text

  bool pass() const;
};

// Throws ConfigError when the scenario cannot run `e`. Module errors are
// caught and reported through RunResult.
RunResult run_experiment(Scenario s, Experiment e, const RunOptions& opt);

}  // namespace brwlab
