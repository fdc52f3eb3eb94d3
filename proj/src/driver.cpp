#include "ddtd/driver.hpp"

#include "ddtd/initgen.hpp"
#include "ddtd/levelset.hpp"
#include "ddtd/pca.hpp"
#include "ddtd/vae.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace ddtd {

namespace {

void notify(const StepObserver& observer, const char* step) {
  if (observer) observer(step);
}

std::vector<ObjectiveVector> elite_objectives(const std::vector<Sample>& elites) {
  std::vector<ObjectiveVector> out;
  out.reserve(elites.size());
  for (const Sample& s : elites) out.push_back(*s.objectives);
  return out;
}

void verify_elites(const std::vector<Sample>& elites) {
  for (size_t i = 0; i < elites.size(); ++i) {
    for (size_t j = 0; j < elites.size(); ++j) {
      if (i != j && dominates(*elites[i].objectives, *elites[j].objectives)) {
        throw std::logic_error("elite invariant violated: sample " +
                               std::to_string(elites[i].id) + " dominates " +
                               std::to_string(elites[j].id));
      }
    }
  }
}

int effective_cap(const RunConfig& config) {
  return config.elite_cap == 0 ? std::numeric_limits<int>::max()
                               : config.elite_cap;
}

}  // namespace

std::vector<Sample> evaluate_population(const std::vector<DensityField>& fields,
                                        const ProblemSpec& problem,
                                        std::int64_t first_id,
                                        int iteration_born, int threads) {
  std::vector<Sample> samples;
  samples.reserve(fields.size());
  for (size_t i = 0; i < fields.size(); ++i) {
    Sample s{fields[i], std::nullopt, iteration_born,
             first_id + static_cast<std::int64_t>(i), false};
    samples.push_back(std::move(s));
  }

  auto work = [&](size_t i) {
    const EvalResult r = evaluate(samples[i].field, problem);
    if (r.status == EvalStatus::SolverFailed) {
      samples[i].evaluation_failed = true;
    } else {
      samples[i].objectives = r.objectives;
    }
  };

  const int n_workers = std::min<int>(threads, static_cast<int>(fields.size()));
  if (n_workers <= 1) {
    for (size_t i = 0; i < fields.size(); ++i) work(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int t = 0; t < n_workers; ++t) {
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < fields.size();
             i = next.fetch_add(1)) {
          work(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return samples;
}

void iterate_once(RunState& state, const RunConfig& config,
                  const ProblemSpec& problem, int max_retries,
                  const StepObserver& observer) {
  if (state.elites.size() < 2) {
    throw std::domain_error("iterate_once needs at least 2 elites");
  }
  const RunState snapshot = state;
  for (int attempt = 0; ; ++attempt) {
    const std::uint64_t train_seed = state.rng();
    try {
      const Mesh mesh = state.elites[0].field.mesh();
      const int m = static_cast<int>(state.elites.size());

      notify(observer, "compress");
      Eigen::MatrixXd X(m, mesh.node_count());
      for (int i = 0; i < m; ++i) {
        X.row(i) = state.elites[i].field.values().transpose();
      }
      const PcaFit pca = fit(X);
      if (pca.model.degenerate || pca.model.k < 1) {
        throw std::runtime_error("PCA degenerate: elite set has no variance");
      }

      Eigen::MatrixXd S = pca.scores;
      Eigen::VectorXd column_scale = Eigen::VectorXd::Ones(S.cols());
      if (config.standardize_scores) {
        for (Eigen::Index j = 0; j < S.cols(); ++j) {
          const double sd = std::sqrt(S.col(j).squaredNorm() / S.rows());
          if (sd > 0.0) {
            column_scale[j] = sd;
            S.col(j) /= sd;
          }
        }
      }

      notify(observer, "train");
      TrainConfig tc = config.train;
      tc.rng_seed = train_seed;
      tc.batch_size = std::min(tc.batch_size, m);
      // warm starts only apply while the score dimension stays put
      const VaeModel* warm =
          config.warm_start && state.last_model &&
                  state.last_model->arch.k_in == S.cols() &&
                  state.last_model->arch.n_latent == tc.n_latent
              ? &*state.last_model
              : nullptr;
      const TrainResult trained = train(S, tc, warm);
      if (config.warm_start) state.last_model = trained.model;
      if (!config.out_dir.empty() && fs::is_directory(config.out_dir)) {
        char name[40];
        std::snprintf(name, sizeof(name), "vae_loss_%04d.csv",
                      state.iteration + 1);
        write_loss_trace((fs::path(config.out_dir) / name).string(),
                         trained.trace);
      }

      notify(observer, "generate");
      const int n_gen = config.n_gen > 0 ? config.n_gen : m;
      const LatentSampler sampler = config.sampler == SamplerKind::Crossover
                                        ? LatentSampler::Crossover
                                        : LatentSampler::Prior;
      GenerateResult gen = generate(trained.model, S, n_gen, state.rng,
                                    sampler, config.crossover_alpha);

      notify(observer, "restore");
      for (Eigen::Index j = 0; j < gen.scores.cols(); ++j) {
        gen.scores.col(j) *= column_scale[j];
      }
      const Eigen::MatrixXd restored = restore(pca.model, gen.scores);

      notify(observer, "normalize");
      std::vector<DensityField> fields;
      fields.reserve(n_gen);
      for (int i = 0; i < n_gen; ++i) {
        fields.push_back(
            normalize_field(DensityField(mesh, restored.row(i).transpose()),
                            config.band_h)
                .field);
      }

      notify(observer, "evaluate");
      std::vector<Sample> generated = evaluate_population(
          fields, problem, state.next_id, state.iteration + 1, config.threads);
      state.next_id += n_gen;

      notify(observer, "merge");
      std::vector<Sample> pool = state.elites;
      for (const Sample& s : generated) {
        state.all_samples.push_back(s);
        if (s.evaluated()) pool.push_back(s);
      }

      notify(observer, "select");
      state.elites = select_elites(pool, effective_cap(config));
      verify_elites(state.elites);
      state.iteration += 1;
      state.hv_trace.push_back(normalized_hypervolume(
          elite_objectives(state.elites), state.hv_reference,
          state.hv_baseline));
      return;
    } catch (const std::exception& err) {
      if (attempt >= max_retries) throw;
      std::cerr << "iteration " << snapshot.iteration + 1 << " attempt "
                << attempt + 1 << " failed (" << err.what()
                << "), retrying with a fresh draw\n";
      const std::mt19937_64 rng_now = state.rng;
      state = snapshot;
      state.rng = rng_now;  // keep the advanced stream: a fresh draw
    }
  }
}

bool termination_check(const RunState& state, const RunConfig& config) {
  if (state.iteration >= config.iterations) return true;
  if (config.stagnation_stop && state.hv_trace.size() >= 10) {
    const double base = state.hv_trace[state.hv_trace.size() - 10];
    const double now = state.hv_trace.back();
    if (now < base * 1.001) return true;
  }
  return false;
}

RunState initialize_run(const RunConfig& config, const ProblemSpec& problem) {
  RunState state;
  state.rng.seed(config.rng_seed);

  std::vector<DensityField> fields;
  if (!config.init_dir.empty()) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(config.init_dir)) {
      if (entry.path().extension() == ".ddtd") {
        paths.push_back(entry.path().string());
      }
    }
    std::sort(paths.begin(), paths.end());
    for (const std::string& p : paths) fields.push_back(read_field(p));
    if (fields.empty()) {
      throw std::runtime_error("no .ddtd fields in " + config.init_dir);
    }
  } else if (config.init_generator == InitGenerator::RandomBlobs) {
    for (int i = 0; i < config.init_count; ++i) {
      const double v = config.init_volume_min +
                       (config.init_volume_max - config.init_volume_min) *
                           (config.init_count == 1
                                ? 0.5
                                : i / double(config.init_count - 1));
      fields.push_back(
          random_blob_field(problem.mesh, state.rng(), v, config.band_h));
    }
  } else {
    SweepConfig sweep;
    sweep.volume_min = config.init_volume_min;
    sweep.volume_max = config.init_volume_max;
    fields = generate_initial_set(problem, config.init_count, sweep);
  }

  std::vector<Sample> samples = evaluate_population(fields, problem, 0, 0,
                                                    config.threads);
  state.next_id = static_cast<std::int64_t>(samples.size());
  std::vector<Sample> ok;
  for (const Sample& s : samples) {
    state.all_samples.push_back(s);
    if (s.evaluated() && (*s.objectives)[0] < kSentinelObjective) {
      ok.push_back(s);
    }
  }
  if (ok.empty()) {
    throw std::runtime_error(
        "no evaluable initial sample: every field is void, disconnected or "
        "failed to solve");
  }
  state.elites = select_elites(ok, effective_cap(config));
  verify_elites(state.elites);
  if (state.elites.size() < 2) {
    throw std::runtime_error("fewer than 2 initial elites");
  }
  state.hv_reference = hypervolume_reference(elite_objectives(state.elites));
  state.hv_baseline =
      hypervolume(elite_objectives(state.elites), state.hv_reference);
  if (!(state.hv_baseline > 0.0)) {
    throw std::runtime_error("initial hypervolume is not positive");
  }
  state.hv_trace.push_back(1.0);
  return state;
}

void write_hv_trace(const std::string& path,
                    const std::vector<double>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "iteration,normalized_hv\n";
  char buf[40];
  for (size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, trace[i]);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

void write_artifacts(const RunConfig& config, const RunState& state) {
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir / "elites");
  write_pareto_csv((out_dir / "pareto.csv").string(), state.elites);
  write_hv_trace((out_dir / "hv_trace.csv").string(), state.hv_trace);
  for (const Sample& s : state.elites) {
    char name[48];
    std::snprintf(name, sizeof(name), "elite_%06lld.ddtd",
                  static_cast<long long>(s.id));
    write_field_binary((out_dir / "elites" / name).string(), s.field);
  }
}

std::vector<Sample> run_loop(RunState& state, const RunConfig& config,
                             const ProblemSpec& problem,
                             const StepObserver& observer) {
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  {
    std::ofstream cfg(out_dir / "config_effective.ini");
    cfg << config_to_string(config);
  }

  while (!termination_check(state, config)) {
    try {
      iterate_once(state, config, problem, 2, observer);
    } catch (const std::exception& err) {
      std::cerr << "run stopped at iteration " << state.iteration << ": "
                << err.what() << '\n';
      break;
    }
    if (config.checkpoint_every > 0 &&
        state.iteration % config.checkpoint_every == 0) {
      save_checkpoint((out_dir / "checkpoint.ddtdckpt").string(), state,
                      config);
    }
  }
  save_checkpoint((out_dir / "checkpoint.ddtdckpt").string(), state, config);
  write_artifacts(config, state);
  return state.elites;
}

}  // namespace

std::vector<Sample> run(const RunConfig& config, const StepObserver& observer) {
  config.check();
  const ProblemSpec problem = config.make_problem_spec();
  problem.check();
  RunState state = initialize_run(config, problem);
  return run_loop(state, config, problem, observer);
}

std::vector<Sample> resume_run(const std::string& checkpoint_path,
                               const StepObserver& observer) {
  auto [state, config] = load_checkpoint(checkpoint_path);
  const ProblemSpec problem = config.make_problem_spec();
  return run_loop(state, config, problem, observer);
}

// --- checkpoint format ------------------------------------------------
//
// "DDTDCKP2" | u32 config-text length | config text | state PODs |
// samples | elite ids | rng text | "DDTDEND!"

namespace {

constexpr char kCkptMagic[8] = {'D', 'D', 'T', 'D', 'C', 'K', 'P', '2'};
constexpr char kCkptEnd[8] = {'D', 'D', 'T', 'D', 'E', 'N', 'D', '!'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto len = get<std::uint64_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint: truncated");
  return s;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * 8));
}

Eigen::VectorXd get_vector(std::istream& in) {
  const auto len = get<std::uint64_t>(in);
  Eigen::VectorXd v(static_cast<Eigen::Index>(len));
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(len * 8));
  if (!in) throw std::runtime_error("checkpoint: truncated");
  return v;
}

void put_sample(std::ostream& out, const Sample& s) {
  const Mesh& mesh = s.field.mesh();
  put<std::int32_t>(out, mesh.dimensionality());
  for (int a = 0; a < mesh.dimensionality(); ++a) {
    put<std::int32_t>(out, mesh.extent(a));
  }
  put<double>(out, mesh.element_length());
  put_vector(out, s.field.values());
  put<std::int32_t>(out, s.objectives ? 1 : 0);
  if (s.objectives) put_vector(out, *s.objectives);
  put<std::int32_t>(out, s.iteration_born);
  put<std::int64_t>(out, s.id);
  put<std::int32_t>(out, s.evaluation_failed ? 1 : 0);
}

Sample get_sample(std::istream& in) {
  const auto dim = get<std::int32_t>(in);
  if (dim != 2 && dim != 3) throw std::runtime_error("checkpoint: bad mesh");
  std::array<int, 3> e{1, 1, 1};
  for (int a = 0; a < dim; ++a) e[a] = get<std::int32_t>(in);
  const double len = get<double>(in);
  const Mesh mesh = dim == 2 ? Mesh(e[0], e[1], len) : Mesh(e[0], e[1], e[2], len);
  Eigen::VectorXd values = get_vector(in);
  Sample s{DensityField(mesh, std::move(values)), std::nullopt, 0, 0, false};
  if (get<std::int32_t>(in) != 0) s.objectives = get_vector(in);
  s.iteration_born = get<std::int32_t>(in);
  s.id = get<std::int64_t>(in);
  s.evaluation_failed = get<std::int32_t>(in) != 0;
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const RunState& state,
                     const RunConfig& config) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(kCkptMagic, 8);
    put_string(out, config_to_string(config));
    put<std::int32_t>(out, state.iteration);
    put<std::int64_t>(out, state.next_id);
    put<double>(out, state.hv_baseline);
    put_vector(out, state.hv_reference);
    put<std::uint64_t>(out, state.hv_trace.size());
    for (double v : state.hv_trace) put<double>(out, v);
    put<std::uint64_t>(out, state.all_samples.size());
    for (const Sample& s : state.all_samples) put_sample(out, s);
    put<std::uint64_t>(out, state.elites.size());
    for (const Sample& s : state.elites) put<std::int64_t>(out, s.id);
    std::ostringstream rng_text;
    rng_text << state.rng;
    put_string(out, rng_text.str());
    out.write(kCkptEnd, 8);
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

std::pair<RunState, RunConfig> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCkptMagic, 8) != 0) {
    throw std::runtime_error(path + ": not a DDTD checkpoint (or wrong version)");
  }
  RunConfig config = parse_config(get_string(in), /*apply_env=*/false);
  RunState state;
  state.iteration = get<std::int32_t>(in);
  state.next_id = get<std::int64_t>(in);
  state.hv_baseline = get<double>(in);
  state.hv_reference = get_vector(in);
  const auto trace_len = get<std::uint64_t>(in);
  state.hv_trace.resize(trace_len);
  for (auto& v : state.hv_trace) v = get<double>(in);
  const auto n_samples = get<std::uint64_t>(in);
  state.all_samples.reserve(n_samples);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    state.all_samples.push_back(get_sample(in));
  }
  const auto n_elites = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_elites; ++i) {
    const auto id = get<std::int64_t>(in);
    const auto it = std::find_if(
        state.all_samples.begin(), state.all_samples.end(),
        [&](const Sample& s) { return s.id == id; });
    if (it == state.all_samples.end()) {
      throw std::runtime_error("checkpoint: elite id not in sample history");
    }
    state.elites.push_back(*it);
  }
  std::istringstream rng_text(get_string(in));
  rng_text >> state.rng;
  if (!rng_text) throw std::runtime_error("checkpoint: bad RNG state");
  char end[8];
  in.read(end, 8);
  if (!in || std::memcmp(end, kCkptEnd, 8) != 0) {
    throw std::runtime_error(path + ": truncated checkpoint");
  }
  return {std::move(state), std::move(config)};
}

}  // namespace ddtd
