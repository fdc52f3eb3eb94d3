#include "ddtd/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddtd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_entries(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ';')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::domain_error("config: bad boolean for " + key + ": " + v);
}

int axis_from(const std::string& tok) {
  if (tok == "x") return 0;
  if (tok == "y") return 1;
  if (tok == "z") return 2;
  throw std::domain_error("config: bad axis: " + tok);
}

char axis_letter(int axis) { return axis == 0 ? 'x' : axis == 1 ? 'y' : 'z'; }

struct ProblemKeys {
  std::array<int, 3> dims = {0, 0, 0};
  double element_length = 0.01;
  std::string objectives = "stress_volume";
  std::array<double, 3> material = {1.0, 0.3, 1e-6};
  std::string fixed, loads, springs, symmetry, passive_box;
  bool any = false;
};

ProblemSpec build_custom(const ProblemKeys& k) {
  ProblemSpec spec;
  spec.name = "custom";
  const bool is3d = k.dims[2] > 0;
  spec.mesh = is3d ? Mesh(k.dims[0], k.dims[1], k.dims[2], k.element_length)
                   : Mesh(k.dims[0], k.dims[1], k.element_length);
  const int d = spec.mesh.dimensionality();
  if (k.objectives == "stress_volume") {
    spec.objective_set = ObjectiveSet::StressVolume;
  } else if (k.objectives == "stress_volume_reaction") {
    spec.objective_set = ObjectiveSet::StressVolumeReaction;
  } else {
    throw std::domain_error("config: bad objectives: " + k.objectives);
  }
  spec.material = {k.material[0], k.material[1], k.material[2]};

  auto node_of = [&](const std::vector<std::string>& tok, size_t at) {
    const int x = std::stoi(tok.at(at));
    const int y = std::stoi(tok.at(at + 1));
    const int z = d == 3 ? std::stoi(tok.at(at + 2)) : 0;
    return node_index(spec.mesh, x, y, z);
  };
  const size_t coord_len = static_cast<size_t>(d);

  for (const std::string& entry : split_entries(k.fixed)) {
    const auto tok = split_ws(entry);
    const std::int64_t n = node_of(tok, 0);
    for (char c : tok.at(coord_len)) {
      spec.fixed_dofs.push_back({n, axis_from(std::string(1, c))});
    }
  }
  for (const std::string& entry : split_entries(k.loads)) {
    const auto tok = split_ws(entry);
    spec.loads.push_back({node_of(tok, 0), axis_from(tok.at(coord_len)),
                          std::stod(tok.at(coord_len + 1))});
  }
  for (const std::string& entry : split_entries(k.springs)) {
    const auto tok = split_ws(entry);
    Spring s{node_of(tok, 0), axis_from(tok.at(coord_len)),
             std::stod(tok.at(coord_len + 1)), false, 1.0};
    size_t at = coord_len + 2;
    if (at < tok.size() && tok[at] == "out") {
      s.is_output_port = true;
      ++at;
    }
    if (at < tok.size()) s.output_sign = std::stod(tok[at]);
    spec.springs.push_back(s);
  }
  for (const std::string& entry : split_entries(k.symmetry)) {
    const auto tok = split_ws(entry);
    spec.symmetry_planes.push_back(
        {axis_from(tok.at(0)), tok.size() < 2 || tok.at(1) == "min"});
  }
  if (!k.passive_box.empty()) {
    spec.passive_void.assign(spec.mesh.element_count(), 0);
    for (const std::string& entry : split_entries(k.passive_box)) {
      const auto tok = split_ws(entry);
      std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 1};
      for (int a = 0; a < d; ++a) {
        lo[a] = std::stoi(tok.at(a));
        hi[a] = std::stoi(tok.at(coord_len + a));
      }
      const int z1 = d == 3 ? hi[2] : 1;
      for (int z = d == 3 ? lo[2] : 0; z < z1; ++z) {
        for (int y = lo[1]; y < hi[1]; ++y) {
          for (int x = lo[0]; x < hi[0]; ++x) {
            spec.passive_void[element_index(spec.mesh, x, y, z)] = 1;
          }
        }
      }
    }
  }
  return spec;
}

}  // namespace

ProblemSpec RunConfig::make_problem_spec() const {
  if (problem == "custom") {
    if (!custom_problem) {
      throw std::domain_error("problem = custom needs a [problem] section");
    }
    return *custom_problem;
  }
  return make_problem(problem, mesh_dims, element_length);
}

void RunConfig::check() const {
  if (iterations < 1) throw std::domain_error("config: iterations must be >= 1");
  if (elite_cap != 0 && elite_cap < 2) {
    throw std::domain_error("config: elite_cap must be >= 2 (0 = unbounded)");
  }
  if (n_gen == 0) {
    throw std::domain_error("config: n_gen = 0 is not allowed (use auto)");
  }
  if (n_gen < -1) throw std::domain_error("config: bad n_gen");
  if (threads < 1) throw std::domain_error("config: threads must be >= 1");
  if (init_count < 2) throw std::domain_error("config: init_count must be >= 2");
  if (!(init_volume_min > 0.0 && init_volume_min <= init_volume_max &&
        init_volume_max < 1.0)) {
    throw std::domain_error("config: bad initial volume sweep");
  }
  if (!(element_length > 0.0)) {
    throw std::domain_error("config: element_length must be > 0");
  }
  if (!(band_h > 0.0)) throw std::domain_error("config: band h must be > 0");
  if (crossover_alpha < 0.0) {
    throw std::domain_error("config: crossover_alpha must be >= 0");
  }
  if (train.batch_size < 1 || train.epochs < 1 || train.n_latent < 1 ||
      !(train.learning_rate > 0.0) || train.beta < 0.0 ||
      train.hidden1 < 0 || train.hidden2 < 0) {
    throw std::domain_error("config: bad [train] section");
  }
  if (checkpoint_every < 0) {
    throw std::domain_error("config: checkpoint_every must be >= 0");
  }
}

RunConfig parse_config(const std::string& text, bool apply_env) {
  RunConfig cfg;
  ProblemKeys pk;
  std::istringstream in(text);
  std::string line, section = "run";
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::domain_error("config: bad section header at line " +
                                std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::domain_error("config: expected key = value at line " +
                              std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    auto bad_key = [&]() {
      throw std::domain_error("config: unknown key [" + section + "] " + key);
    };
    if (section == "run") {
      if (key == "problem") {
        cfg.problem = value;
      } else if (key == "mesh") {
        const auto tok = split_ws(value);
        cfg.mesh_dims = {0, 0, 0};
        for (size_t i = 0; i < tok.size() && i < 3; ++i) {
          cfg.mesh_dims[i] = std::stoi(tok[i]);
        }
      } else if (key == "element_length") {
        cfg.element_length = std::stod(value);
      } else if (key == "elite_cap") {
        cfg.elite_cap = value == "unbounded" ? 0 : std::stoi(value);
      } else if (key == "iterations") {
        cfg.iterations = std::stoi(value);
      } else if (key == "n_gen") {
        cfg.n_gen = value == "auto" ? -1 : std::stoi(value);
      } else if (key == "rng_seed") {
        cfg.rng_seed = std::stoull(value);
      } else if (key == "out_dir") {
        cfg.out_dir = value;
      } else if (key == "checkpoint_every") {
        cfg.checkpoint_every = std::stoi(value);
      } else if (key == "threads") {
        cfg.threads = std::stoi(value);
      } else if (key == "init_count") {
        cfg.init_count = std::stoi(value);
      } else if (key == "init_volume_min") {
        cfg.init_volume_min = std::stod(value);
      } else if (key == "init_volume_max") {
        cfg.init_volume_max = std::stod(value);
      } else if (key == "init_dir") {
        cfg.init_dir = value;
      } else if (key == "init_generator") {
        if (value == "lowfi") {
          cfg.init_generator = InitGenerator::LowFi;
        } else if (value == "random_blobs") {
          cfg.init_generator = InitGenerator::RandomBlobs;
        } else {
          throw std::domain_error("config: bad init_generator: " + value);
        }
      } else if (key == "sampler") {
        if (value == "crossover") {
          cfg.sampler = SamplerKind::Crossover;
        } else if (value == "prior") {
          cfg.sampler = SamplerKind::Prior;
        } else {
          throw std::domain_error("config: bad sampler: " + value);
        }
      } else if (key == "crossover_alpha") {
        cfg.crossover_alpha = std::stod(value);
      } else if (key == "standardize_scores") {
        cfg.standardize_scores = parse_bool(value, key);
      } else if (key == "warm_start") {
        cfg.warm_start = parse_bool(value, key);
      } else if (key == "stagnation_stop") {
        cfg.stagnation_stop = parse_bool(value, key);
      } else {
        bad_key();
      }
    } else if (section == "train") {
      if (key == "learning_rate") {
        cfg.train.learning_rate = std::stod(value);
      } else if (key == "batch_size") {
        cfg.train.batch_size = std::stoi(value);
      } else if (key == "epochs") {
        cfg.train.epochs = std::stoi(value);
      } else if (key == "n_latent") {
        cfg.train.n_latent = std::stoi(value);
      } else if (key == "beta") {
        cfg.train.beta = std::stod(value);
      } else if (key == "hidden1") {
        cfg.train.hidden1 = std::stoi(value);
      } else if (key == "hidden2") {
        cfg.train.hidden2 = std::stoi(value);
      } else {
        bad_key();
      }
    } else if (section == "levelset") {
      if (key == "h") {
        cfg.band_h = std::stod(value);
      } else {
        bad_key();
      }
    } else if (section == "problem") {
      pk.any = true;
      if (key == "dims") {
        const auto tok = split_ws(value);
        for (size_t i = 0; i < tok.size() && i < 3; ++i) {
          pk.dims[i] = std::stoi(tok[i]);
        }
      } else if (key == "element_length") {
        pk.element_length = std::stod(value);
      } else if (key == "objectives") {
        pk.objectives = value;
      } else if (key == "material") {
        const auto tok = split_ws(value);
        for (size_t i = 0; i < tok.size() && i < 3; ++i) {
          pk.material[i] = std::stod(tok[i]);
        }
      } else if (key == "fixed") {
        pk.fixed = value;
      } else if (key == "loads") {
        pk.loads = value;
      } else if (key == "springs") {
        pk.springs = value;
      } else if (key == "symmetry") {
        pk.symmetry = value;
      } else if (key == "passive_box") {
        pk.passive_box = value;
      } else {
        bad_key();
      }
    } else {
      throw std::domain_error("config: unknown section [" + section + "]");
    }
  }
  if (pk.any) cfg.custom_problem = build_custom(pk);

  if (apply_env) {
    if (const char* seed = std::getenv("DDTD_SEED")) {
      cfg.rng_seed = std::stoull(seed);
    }
    if (const char* threads = std::getenv("DDTD_THREADS")) {
      cfg.threads = std::min(cfg.threads, std::max(1, std::atoi(threads)));
    }
  }
  cfg.check();
  return cfg;
}

RunConfig load_config_file(const std::string& path, bool apply_env) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), apply_env);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_problem(std::ostringstream& out, const ProblemSpec& p) {
  const int d = p.mesh.dimensionality();
  out << "\n[problem]\n";
  out << "dims =";
  for (int a = 0; a < d; ++a) out << ' ' << p.mesh.extent(a);
  out << "\nelement_length = " << fmt(p.mesh.element_length()) << '\n';
  out << "objectives = "
      << (p.objective_set == ObjectiveSet::StressVolumeReaction
              ? "stress_volume_reaction"
              : "stress_volume")
      << '\n';
  out << "material = " << fmt(p.material.youngs_modulus) << ' '
      << fmt(p.material.poisson_ratio) << ' ' << fmt(p.material.e_min) << '\n';

  auto coords = [&](std::int64_t node) {
    const auto c = node_coords(p.mesh, node);
    std::string s = std::to_string(c[0]) + ' ' + std::to_string(c[1]);
    if (d == 3) s += ' ' + std::to_string(c[2]);
    return s;
  };
  if (!p.fixed_dofs.empty()) {
    out << "fixed = ";
    for (size_t i = 0; i < p.fixed_dofs.size(); ++i) {
      if (i) out << "; ";
      out << coords(p.fixed_dofs[i].node) << ' '
          << axis_letter(p.fixed_dofs[i].axis);
    }
    out << '\n';
  }
  if (!p.loads.empty()) {
    out << "loads = ";
    for (size_t i = 0; i < p.loads.size(); ++i) {
      if (i) out << "; ";
      out << coords(p.loads[i].node) << ' ' << axis_letter(p.loads[i].axis)
          << ' ' << fmt(p.loads[i].magnitude);
    }
    out << '\n';
  }
  if (!p.springs.empty()) {
    out << "springs = ";
    for (size_t i = 0; i < p.springs.size(); ++i) {
      if (i) out << "; ";
      const Spring& s = p.springs[i];
      out << coords(s.node) << ' ' << axis_letter(s.axis) << ' '
          << fmt(s.stiffness);
      if (s.is_output_port) out << " out";
      out << ' ' << fmt(s.output_sign);
    }
    out << '\n';
  }
  if (!p.symmetry_planes.empty()) {
    out << "symmetry = ";
    for (size_t i = 0; i < p.symmetry_planes.size(); ++i) {
      if (i) out << "; ";
      out << axis_letter(p.symmetry_planes[i].axis) << ' '
          << (p.symmetry_planes[i].at_min ? "min" : "max");
    }
    out << '\n';
  }
  if (!p.passive_void.empty()) {
    // one box per passive element keeps the format trivially exact
    out << "passive_box = ";
    bool first = true;
    const int nz = d == 3 ? p.mesh.extent(2) : 1;
    std::int64_t e = 0;
    for (int z = 0; z < nz; ++z) {
      for (int y = 0; y < p.mesh.extent(1); ++y) {
        for (int x = 0; x < p.mesh.extent(0); ++x, ++e) {
          if (!p.passive_void[e]) continue;
          if (!first) out << "; ";
          first = false;
          if (d == 3) {
            out << x << ' ' << y << ' ' << z << ' ' << x + 1 << ' ' << y + 1
                << ' ' << z + 1;
          } else {
            out << x << ' ' << y << ' ' << x + 1 << ' ' << y + 1;
          }
        }
      }
    }
    out << '\n';
  }
}

}  // namespace

std::string config_to_string(const RunConfig& config) {
  std::ostringstream out;
  out << "[run]\n";
  out << "problem = " << config.problem << '\n';
  if (config.mesh_dims[0] > 0) {
    out << "mesh =";
    for (int v : config.mesh_dims) {
      if (v > 0) out << ' ' << v;
    }
    out << '\n';
  }
  out << "element_length = " << fmt(config.element_length) << '\n';
  out << "elite_cap = "
      << (config.elite_cap == 0 ? std::string("unbounded")
                                : std::to_string(config.elite_cap))
      << '\n';
  out << "iterations = " << config.iterations << '\n';
  out << "n_gen = "
      << (config.n_gen < 0 ? std::string("auto") : std::to_string(config.n_gen))
      << '\n';
  out << "rng_seed = " << config.rng_seed << '\n';
  out << "out_dir = " << config.out_dir << '\n';
  out << "checkpoint_every = " << config.checkpoint_every << '\n';
  out << "threads = " << config.threads << '\n';
  out << "init_count = " << config.init_count << '\n';
  out << "init_volume_min = " << fmt(config.init_volume_min) << '\n';
  out << "init_volume_max = " << fmt(config.init_volume_max) << '\n';
  if (!config.init_dir.empty()) out << "init_dir = " << config.init_dir << '\n';
  out << "init_generator = "
      << (config.init_generator == InitGenerator::LowFi ? "lowfi"
                                                        : "random_blobs")
      << '\n';
  out << "sampler = "
      << (config.sampler == SamplerKind::Crossover ? "crossover" : "prior")
      << '\n';
  out << "crossover_alpha = " << fmt(config.crossover_alpha) << '\n';
  out << "standardize_scores = "
      << (config.standardize_scores ? "true" : "false") << '\n';
  out << "warm_start = " << (config.warm_start ? "true" : "false") << '\n';
  out << "stagnation_stop = " << (config.stagnation_stop ? "true" : "false")
      << '\n';

  out << "\n[train]\n";
  out << "learning_rate = " << fmt(config.train.learning_rate) << '\n';
  out << "batch_size = " << config.train.batch_size << '\n';
  out << "epochs = " << config.train.epochs << '\n';
  out << "n_latent = " << config.train.n_latent << '\n';
  out << "beta = " << fmt(config.train.beta) << '\n';
  out << "hidden1 = " << config.train.hidden1 << '\n';
  out << "hidden2 = " << config.train.hidden2 << '\n';

  out << "\n[levelset]\n";
  out << "h = " << fmt(config.band_h) << '\n';

  if (config.problem == "custom" && config.custom_problem) {
    append_problem(out, *config.custom_problem);
  }
  return out.str();
}

}  // namespace ddtd
