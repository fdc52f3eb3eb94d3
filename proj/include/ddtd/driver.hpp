#pragma once

#include "ddtd/config.hpp"
#include "ddtd/fem.hpp"
#include "ddtd/field.hpp"
#include "ddtd/pareto.hpp"
#include "ddtd/vae.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ddtd {

/// Mutable state of one optimization run. Everything needed to continue
/// the run bit-identically lives here.
struct RunState {
  int iteration = 0;
  std::vector<Sample> all_samples;  // full evaluated history
  std::vector<Sample> elites;       // mutually non-dominated subset
  std::vector<double> hv_trace;     // normalized hypervolume, entry 0 = 1.0
  ObjectiveVector hv_reference;
  double hv_baseline = 0.0;
  std::int64_t next_id = 0;
  std::mt19937_64 rng;
  // carried between iterations only when warm starts are enabled
  std::optional<VaeModel> last_model;
};

/// Called with "compress", "train", "generate", "restore", "normalize",
/// "evaluate", "merge", "select" as the iteration walks its steps.
using StepObserver = std::function<void(const std::string&)>;

/// One loop iteration: PCA-compress the elites, train the VAE on the
/// scores, generate, restore, normalize, evaluate (optionally across a
/// worker pool), merge, reselect, and append to the hypervolume trace.
/// On VAE divergence or PCA degeneracy the state rolls back and the
/// iteration retries with a fresh RNG draw, at most `max_retries` extra
/// attempts, then rethrows.
void iterate_once(RunState& state, const RunConfig& config,
                  const ProblemSpec& problem, int max_retries = 2,
                  const StepObserver& observer = {});

/// True once the iteration budget is spent, or (when enabled) when the
/// normalized hypervolume improved by less than 0.1% over the last ten
/// trace entries.
bool termination_check(const RunState& state, const RunConfig& config);

/// Seeds the run: builds or loads the initial fields, evaluates them,
/// selects the first elite set and pins the hypervolume reference/baseline.
RunState initialize_run(const RunConfig& config, const ProblemSpec& problem);

/// Full run: initialize, iterate until termination, persist artifacts
/// (elite field files, pareto.csv, hv_trace.csv, checkpoints) in
/// config.out_dir. Returns the final elites.
std::vector<Sample> run(const RunConfig& config,
                        const StepObserver& observer = {});

/// Continues a checkpointed run to completion.
std::vector<Sample> resume_run(const std::string& checkpoint_path,
                               const StepObserver& observer = {});

/// Versioned binary checkpoint; write is atomic (temp file + rename).
void save_checkpoint(const std::string& path, const RunState& state,
                     const RunConfig& config);
std::pair<RunState, RunConfig> load_checkpoint(const std::string& path);

/// Evaluates fields into samples (ids assigned sequentially from
/// state-managed counters by the caller), using `threads` workers.
std::vector<Sample> evaluate_population(const std::vector<DensityField>& fields,
                                        const ProblemSpec& problem,
                                        std::int64_t first_id,
                                        int iteration_born, int threads);

/// Writes `iteration,normalized_hv` rows.
void write_hv_trace(const std::string& path,
                    const std::vector<double>& trace);

}  // namespace ddtd
