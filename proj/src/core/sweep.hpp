#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "training.hpp"

namespace lnadapt {

enum class System { sd, ol, ol_full_ln, ol_lrpd_ln };

const std::string& system_display_name(System s);  // "SD", "OL", ...
const std::string& system_token(System s);         // "sd", "ol", "full-ln", "lrpd-ln"
System system_from_token(const std::string& token);

struct SpeakerConfig {
  std::uint64_t seed = 0;
  double distance = 0.0;
  int n_utts = 0;
};

struct ExperimentConfig {
  SpeakerConfig source{11, 0.0, 1060};
  SpeakerConfig target{23, 0.2, 260};
  std::vector<int> sizes = {10, 20, 40, 100, 200};
  std::vector<System> systems = {System::sd, System::ol, System::ol_full_ln,
                                 System::ol_lrpd_ln};
  std::vector<std::uint64_t> rep_seeds = {1, 2, 3, 4, 5};
  std::size_t rank = 10;
  // Utterance lengths for the sweep corpora. Shorter than the gen-corpus
  // default so the smallest adaptation sizes are genuinely data-limited.
  int min_frames = 16;
  int max_frames = 32;
  // Every adaptation cell gets the same optimization budget in gradient
  // updates; per-cell epochs = max(1, adapt_updates / n_adapt). Small cells
  // therefore revisit their few utterances many times, large cells see each
  // utterance only a handful of times.
  int adapt_updates = 1200;
  TrainConfig sd_train = TrainConfig::sd_default();
  TrainConfig adapt_train = TrainConfig::adapt_default();

  void validate() const;
  static ExperimentConfig easy_desk();
  static ExperimentConfig tough_desk();
};

ExperimentConfig parse_experiment_config(const std::string& path);
void write_experiment_config(const ExperimentConfig& cfg, const std::string& path);

struct SweepRow {
  System system;
  int n_adapt;
  std::uint64_t seed;
  MetricsReport metrics;
};

struct TrendCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  // median validation metrics per (system, size)
  std::map<std::pair<System, int>, MetricsReport> medians;
  std::vector<TrendCheck> checks;
  bool all_pass = true;

  double median_mse(System s, int size) const;
};

// Runs the full grid: one source SD model, then per (size x system x seed)
// train/adapt + evaluate on the target validation split. Writes
// out_dir/sweep.csv and out_dir/summary.md when out_dir is non-empty.
SweepResult run_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                      int threads = 1);

}  // namespace lnadapt
