#pragma once

#include <filesystem>
#include <string>

#include "ecuhealth/ecuhealth.hpp"

namespace ecuhealth::fixtures {

/// Small but complete training settings so tests stay fast.
inline TrainingSettings quick_settings(std::uint64_t seed = 3) {
  TrainingSettings s;
  s.seed = seed;
  s.autoencoder.epochs = 60;
  s.autoencoder.early_stop_patience = 10;
  s.forest.n_trees = 8;
  s.forest.max_depth = 8;
  return s;
}

inline synthetic::Scenario clean_scenario(std::size_t frames, std::uint64_t seed) {
  synthetic::ScenarioConfig c;
  c.n_frames = frames;
  c.seed = seed;
  return synthetic::generate(default_catalog(), c);
}

/// A trained artifact shared by the tests in one binary.
inline const TrainingOutcome& shared_outcome() {
  static const TrainingOutcome outcome = fit_pipeline(clean_scenario(2000, 11).data, quick_settings());
  return outcome;
}

/// Fresh directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ecuhealth_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ecuhealth::fixtures
