#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ddpca::exp {

struct ExperimentOptions {
  std::string name;           // exp1 | exp2 | exp3 | exp4 | exp5 | fig1 | fig5
  std::string scale = "desk"; // desk | paper
  std::uint64_t seed = 20240817;
  std::string out_dir = ".";
  int reps = 0;     // 0 = scale default
  int threads = 0;  // 0 = hardware concurrency
};

struct ExperimentOutput {
  std::vector<std::string> files;  // full paths written
  std::vector<std::string> warnings;
};

/// Runs one named study and writes its table/plot-data CSVs. File names are
/// fixed and contents depend only on (name, scale, seed, reps), so a rerun
/// reproduces them byte for byte.
ExperimentOutput run_experiment(const ExperimentOptions& options);

}  // namespace ddpca::exp
