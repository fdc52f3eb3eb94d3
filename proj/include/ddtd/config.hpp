#pragma once

#include "ddtd/fem.hpp"
#include "ddtd/vae.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace ddtd {

enum class SamplerKind { Crossover, Prior };
enum class InitGenerator { LowFi, RandomBlobs };

/// Whole-run configuration, read from a flat `key = value` file with
/// [run], [train], [levelset] and optional [problem] sections. Every
/// paper-scale default is pre-filled.
struct RunConfig {
  // [run]
  std::string problem = "mech2d";  // built-in name, or "custom"
  std::array<int, 3> mesh_dims = {0, 0, 0};  // 0 = problem default
  double element_length = 0.01;
  int elite_cap = 400;  // 0 = unbounded
  int iterations = 50;
  int n_gen = -1;  // -1 = auto: one offspring per current elite
  std::uint64_t rng_seed = 1;
  std::string out_dir = "ddtd_out";
  int checkpoint_every = 10;  // iterations; 0 = only at the end
  int threads = 1;
  int init_count = 24;
  double init_volume_min = 0.1;
  double init_volume_max = 0.5;
  std::string init_dir;  // load initial fields instead of generating
  InitGenerator init_generator = InitGenerator::LowFi;
  SamplerKind sampler = SamplerKind::Crossover;
  double crossover_alpha = 0.5;
  bool standardize_scores = false;
  bool warm_start = false;
  bool stagnation_stop = false;

  // [train]
  TrainConfig train;

  // [levelset]
  double band_h = 0.01;

  // [problem] (only for problem = custom)
  std::optional<ProblemSpec> custom_problem;

  /// Built-in or custom ProblemSpec for this run.
  ProblemSpec make_problem_spec() const;

  /// Throws std::domain_error on out-of-range values.
  void check() const;
};

/// Parses a config file. `apply_env` lets DDTD_SEED and DDTD_THREADS
/// override the file values (resumes skip it to stay reproducible).
RunConfig load_config_file(const std::string& path, bool apply_env = true);
RunConfig parse_config(const std::string& text, bool apply_env = false);

/// Serializes every field, custom problems included; parse_config of the
/// result reproduces the config.
std::string config_to_string(const RunConfig& config);

}  // namespace ddtd
