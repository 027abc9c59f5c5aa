#pragma once
// Experiment orchestration: strict-schema configuration, seeded reproducible
// runs, CSV/manifest persistence, and sample-range checkpointing.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perc/kernel.hpp"
#include "perc/mc.hpp"

namespace perc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KernelConfig {
  std::string family = "nn";
  int d = 2;
  int64_t L = 1;
  std::optional<double> alpha;
  std::optional<double> trunc_radius;

  KernelSpec build() const;
};

struct ObservableConfig {
  std::string type;             // one-arm | ball-volume | size-tail | second-moment | long-edge
  std::vector<double> r_grid;   // for radius-indexed observables
  std::vector<uint64_t> s_grid; // for size-tail
  uint64_t samples = 100000;
  double n_factor = 2.0;        // second-moment
  uint64_t k = 1;               // long-edge
  std::string name;             // output file stem; defaults to type
};

struct PcSearchConfig {
  double r1 = 16.0, r2 = 32.0;
  double tol = 0.01;
  uint64_t budget = 400000;
};

struct ExperimentConfig {
  KernelConfig kernel;
  // exactly one of the two:
  std::optional<double> p_fixed;
  std::optional<PcSearchConfig> p_critical;
  std::vector<ObservableConfig> observables;
  uint64_t seed = 1;
  std::string out_dir = ".";
  int workers = 1;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json_text() const;  // canonical echo (also the digest basis)
};

struct RunManifest {
  std::string config_echo;
  std::string version;
  double p_resolved = 0.0;
  double p_stderr = 0.0;
  bool p_searched = false;
  double wall_seconds = 0.0;
  std::map<std::string, std::string> file_digests;  // csv path -> sha256
  std::string error;  // empty on success; estimator failures recorded here

  std::string to_json_text() const;
};

// Executes the configured observables (resolving p first when requested),
// writes one CSV per observable plus manifest.json under out_dir, and keeps
// a checkpoint so an interrupted run resumes at the recorded sample chunk
// with bit-identical output. `max_batches` caps the number of chunk batches
// executed in this invocation (0 = unlimited): when the cap stops the run
// early the checkpoint is left in place and the manifest carries
// error = "interrupted".
RunManifest run_experiment(const ExperimentConfig& config, uint64_t max_batches = 0);

// CSV helpers shared by the CLI.
std::string format_g17(double v);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace perc
