#include "ddtd/initgen.hpp"

#include "ddtd/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ddtd {

namespace {

// cone-weight density filter over element centers
class DensityFilter {
public:
  DensityFilter(const Mesh& mesh, double radius,
                const std::vector<std::uint8_t>& passive)
      : mesh_(mesh), passive_(passive) {
    const int d = mesh.dimensionality();
    nx_ = mesh.extent(0);
    ny_ = mesh.extent(1);
    nz_ = d == 3 ? mesh.extent(2) : 1;
    const int reach = std::max(0, static_cast<int>(std::ceil(radius)) - 1);
    const std::int64_t ne = mesh.element_count();
    neighbors_.resize(ne);
    weights_.resize(ne);
    weight_sums_.assign(ne, 0.0);
    for (std::int64_t e = 0; e < ne; ++e) {
      const auto c = coords(e);
      for (int dz = -reach; dz <= reach; ++dz) {
        if (nz_ == 1 && dz != 0) continue;
        for (int dy = -reach; dy <= reach; ++dy) {
          for (int dx = -reach; dx <= reach; ++dx) {
            const int x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
            if (x < 0 || x >= nx_ || y < 0 || y >= ny_ || z < 0 || z >= nz_) {
              continue;
            }
            const double w =
                radius - std::sqrt(double(dx * dx + dy * dy + dz * dz));
            if (w <= 0.0) continue;
            neighbors_[e].push_back(index(x, y, z));
            weights_[e].push_back(w);
            weight_sums_[e] += w;
          }
        }
      }
    }
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> out(x.size(), 0.0);
    for (size_t e = 0; e < x.size(); ++e) {
      if (is_passive(e)) continue;
      double acc = 0.0;
      for (size_t k = 0; k < neighbors_[e].size(); ++k) {
        acc += weights_[e][k] * x[neighbors_[e][k]];
      }
      out[e] = acc / weight_sums_[e];
    }
    return out;
  }

  // chain rule of apply: sens_design_j = sum_e w_ej / W_e * sens_phys_e
  std::vector<double> back(const std::vector<double>& sens_phys) const {
    std::vector<double> out(sens_phys.size(), 0.0);
    for (size_t e = 0; e < sens_phys.size(); ++e) {
      if (is_passive(e)) continue;
      const double s = sens_phys[e] / weight_sums_[e];
      for (size_t k = 0; k < neighbors_[e].size(); ++k) {
        out[neighbors_[e][k]] += weights_[e][k] * s;
      }
    }
    return out;
  }

  bool is_passive(size_t e) const {
    return !passive_.empty() && passive_[e] != 0;
  }

private:
  std::array<int, 3> coords(std::int64_t e) const {
    return {static_cast<int>(e % nx_), static_cast<int>((e / nx_) % ny_),
            static_cast<int>(e / (static_cast<std::int64_t>(nx_) * ny_))};
  }
  std::int64_t index(int x, int y, int z) const {
    return x + static_cast<std::int64_t>(nx_) * (y + static_cast<std::int64_t>(ny_) * z);
  }

  Mesh mesh_;
  std::vector<std::uint8_t> passive_;
  std::vector<std::vector<std::int64_t>> neighbors_;
  std::vector<std::vector<double>> weights_;
  std::vector<double> weight_sums_;
  int nx_, ny_, nz_;
};

// element energies u_e^T Ke u_e (and lambda_e^T Ke u_e for the adjoint)
std::vector<double> element_products(const Mesh& mesh,
                                     const Eigen::MatrixXd& Ke,
                                     const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& lambda) {
  const int d = mesh.dimensionality();
  const int nc = d == 2 ? 4 : 8;
  const int nz = d == 3 ? mesh.extent(2) : 1;
  std::vector<double> out(mesh.element_count());
  Eigen::VectorXd ue(nc * d), le(nc * d);
  std::int64_t e = 0;
  for (int ez = 0; ez < nz; ++ez) {
    for (int ey = 0; ey < mesh.extent(1); ++ey) {
      for (int ex = 0; ex < mesh.extent(0); ++ex, ++e) {
        const auto nodes = element_nodes(mesh, ex, ey, ez);
        for (int i = 0; i < nc; ++i) {
          for (int a = 0; a < d; ++a) {
            ue[i * d + a] = u[nodes[i] * d + a];
            le[i * d + a] = lambda[nodes[i] * d + a];
          }
        }
        out[e] = le.dot(Ke * ue);
      }
    }
  }
  return out;
}

// mean over active (non-passive) elements
double active_mean(const std::vector<double>& x,
                   const std::vector<std::uint8_t>& passive) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (size_t e = 0; e < x.size(); ++e) {
    if (!passive.empty() && passive[e]) continue;
    sum += x[e];
    ++n;
  }
  return sum / static_cast<double>(n);
}

DensityField elements_to_nodes(const Mesh& mesh,
                               const std::vector<double>& xphys) {
  const int d = mesh.dimensionality();
  const int nc = d == 2 ? 4 : 8;
  const int nz = d == 3 ? mesh.extent(2) : 1;
  Eigen::VectorXd nodal = Eigen::VectorXd::Zero(mesh.node_count());
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(mesh.node_count());
  std::int64_t e = 0;
  for (int ez = 0; ez < nz; ++ez) {
    for (int ey = 0; ey < mesh.extent(1); ++ey) {
      for (int ex = 0; ex < mesh.extent(0); ++ex, ++e) {
        const auto nodes = element_nodes(mesh, ex, ey, ez);
        for (int i = 0; i < nc; ++i) {
          nodal[nodes[i]] += xphys[e];
          weight[nodes[i]] += 1.0;
        }
      }
    }
  }
  for (std::int64_t i = 0; i < nodal.size(); ++i) nodal[i] /= weight[i];
  return DensityField(mesh, std::move(nodal));
}

// volume fraction of the normalized field over active elements
double normalized_volume_fraction(const DensityField& field,
                                  const ProblemSpec& spec) {
  const std::vector<double> rho = element_densities(field, spec);
  return active_mean(rho, spec.passive_void);
}

// Shift nodal densities until the normalized field hits the target volume
// fraction; normalization snaps gray transition zones to the band and can
// drift the volume by a few percent otherwise.
NormalizeResult normalize_to_volume(const DensityField& nodal,
                                    const ProblemSpec& spec, double h,
                                    double target) {
  NormalizeResult result = normalize_field(nodal, h);
  auto fraction_of = [&](const NormalizeResult& r) {
    if (r.had_interface) return normalized_volume_fraction(r.field, spec);
    return r.field.values().size() > 0 && r.field[0] > 0.5 ? 1.0 : 0.0;
  };
  if (std::abs(fraction_of(result) - target) < 2e-3) return result;

  // bisect a density shift; raising every nodal value grows the solid
  double lo = -0.6, hi = 0.6;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    Eigen::VectorXd shifted = nodal.values().array() + mid;
    NormalizeResult cand =
        normalize_field(DensityField(nodal.mesh(), std::move(shifted)), h);
    const double vf = fraction_of(cand);
    if (cand.had_interface) result = std::move(cand);
    if (cand.had_interface && std::abs(vf - target) < 1e-3) break;
    (vf > target ? hi : lo) = mid;
  }
  return result;
}

}  // namespace

SimpResult simp_optimize(const LowFiSpec& spec, std::uint64_t /*seed*/) {
  if (!(spec.volume_fraction > 0.0 && spec.volume_fraction < 1.0)) {
    throw std::domain_error("volume fraction must lie in (0, 1)");
  }
  if (spec.penalization < 1.0) {
    throw std::domain_error("SIMP penalization must be >= 1");
  }
  spec.base.check();

  const ProblemSpec& base = spec.base;
  const Mesh& mesh = base.mesh;
  const int d = mesh.dimensionality();
  const std::int64_t ne = mesh.element_count();
  const double E = base.material.youngs_modulus;
  const double e_min = base.material.e_min;
  const double p = spec.penalization;
  const bool mechanism =
      base.objective_set == ObjectiveSet::StressVolumeReaction;

  // Low-fidelity problem: mechanism port springs are rebuilt at soft
  // stiffnesses relative to the structural stiffness scale E len^(d-2)
  // (element matrices carry that factor), everything else is inherited.
  ProblemSpec lowfi = base;
  const Spring* out_port = nullptr;
  if (mechanism) {
    const double stiffness_scale =
        E * std::pow(mesh.element_length(), d - 2);
    lowfi.springs.clear();
    for (const auto& s : base.springs) {
      Spring soft = s;
      if (s.is_output_port) {
        soft.stiffness =
            spec.output_spring * spec.spring_multiplier * stiffness_scale;
      }
      lowfi.springs.push_back(soft);
    }
    if (spec.input_spring > 0.0) {
      for (const auto& l : base.loads) {
        lowfi.springs.push_back(
            {l.node, l.axis, spec.input_spring * stiffness_scale, false, 1.0});
      }
    }
  }
  for (const auto& s : lowfi.springs) {
    if (s.is_output_port) out_port = &s;
  }

  const DensityFilter filter(mesh, spec.filter_radius, base.passive_void);
  const Eigen::MatrixXd Ke = element_stiffness(base.material,
                                               mesh.element_length(), d);

  std::vector<double> x(ne, spec.volume_fraction);
  for (std::int64_t e = 0; e < ne; ++e) {
    if (filter.is_passive(e)) x[e] = 0.0;
  }
  std::vector<double> xphys = filter.apply(x);

  SimpResult result;
  double objective = 0.0;
  auto run_fe = [&](const std::vector<double>& xp, Eigen::VectorXd& u,
                    Eigen::VectorXd& lambda) {
    std::vector<double> scale(ne);
    for (std::int64_t e = 0; e < ne; ++e) {
      scale[e] = e_min + std::pow(xp[e], p) * (E - e_min);
    }
    const LinearSystem sys = assemble_scaled(scale, lowfi);
    u = solve(sys);
    if (mechanism) {
      Eigen::VectorXd l_full =
          Eigen::VectorXd::Zero(mesh.node_count() * d);
      l_full[out_port->node * d + out_port->axis] = -out_port->output_sign;
      lambda = solve_with(sys, l_full);
      objective = -out_port->output_sign *
                  u[out_port->node * d + out_port->axis];
    } else {
      lambda = u;  // compliance is self-adjoint
      objective = 0.0;
      for (const auto& l : base.loads) {
        objective += l.magnitude * u[l.node * d + l.axis];
      }
    }
  };

  double change = 1.0;
  int it = 0;
  for (; it < spec.max_iterations && change > spec.change_tol; ++it) {
    Eigen::VectorXd u, lambda;
    run_fe(xphys, u, lambda);

    const std::vector<double> prod = element_products(mesh, Ke, u, lambda);
    std::vector<double> dc_phys(ne, 0.0);
    for (std::int64_t e = 0; e < ne; ++e) {
      if (filter.is_passive(e)) continue;
      const double dscale = p * std::pow(xphys[e], p - 1.0) * (E - e_min);
      dc_phys[e] = -dscale * prod[e];
    }
    const std::vector<double> dc = filter.back(dc_phys);
    // volume sensitivity through the filter is uniform (weights normalize)
    std::vector<double> dv_phys(ne, 1.0);
    for (std::int64_t e = 0; e < ne; ++e) {
      if (filter.is_passive(e)) dv_phys[e] = 0.0;
    }
    const std::vector<double> dv = filter.back(dv_phys);

    // OC update with damped positive-sensitivity handling; bisection keeps
    // the filtered volume on target
    std::vector<double> xnew(ne, 0.0), xphys_new;
    double l1 = 1e-12, l2 = 1e12;
    while ((l2 - l1) / (l1 + l2) > 1e-6) {
      const double lmid = 0.5 * (l1 + l2);
      for (std::int64_t e = 0; e < ne; ++e) {
        if (filter.is_passive(e)) {
          xnew[e] = 0.0;
          continue;
        }
        const double be =
            std::max(1e-10, -dc[e] / (lmid * std::max(dv[e], 1e-12)));
        const double cand = x[e] * std::pow(be, 0.3);
        xnew[e] = std::clamp(cand, std::max(1e-3, x[e] - spec.move_limit),
                             std::min(1.0, x[e] + spec.move_limit));
      }
      xphys_new = filter.apply(xnew);
      if (active_mean(xphys_new, base.passive_void) > spec.volume_fraction) {
        l1 = lmid;
      } else {
        l2 = lmid;
      }
    }

    change = 0.0;
    for (std::int64_t e = 0; e < ne; ++e) {
      change = std::max(change, std::abs(xnew[e] - x[e]));
    }
    x = xnew;
    xphys = xphys_new;
  }
  result.converged = change <= spec.change_tol;
  result.iterations = it;

  {
    Eigen::VectorXd u, lambda;
    run_fe(xphys, u, lambda);
  }
  result.objective = objective;

  const DensityField nodal = elements_to_nodes(mesh, xphys);
  NormalizeResult normalized = normalize_to_volume(
      nodal, base, mesh.element_length(), spec.volume_fraction);
  result.field = std::move(normalized.field);
  result.signed_distance = std::move(normalized.signed_distance);
  return result;
}

std::vector<DensityField> generate_initial_set(const ProblemSpec& base,
                                               int count,
                                               const SweepConfig& sweep) {
  if (count < 2) throw std::domain_error("initial set needs count >= 2");
  const bool mechanism =
      base.objective_set == ObjectiveSet::StressVolumeReaction;

  struct Combo {
    double volfrac;
    double mult;
    double radius;
  };
  const std::vector<double> radii =
      sweep.filter_radii.empty() ? std::vector<double>{1.5}
                                 : sweep.filter_radii;
  std::vector<Combo> combos;
  if (mechanism && sweep.spring_multipliers.size() > 1) {
    const int per_v = static_cast<int>(sweep.spring_multipliers.size() *
                                       radii.size());
    const int nv = (count + per_v - 1) / per_v;
    for (int i = 0; i < nv && static_cast<int>(combos.size()) < count; ++i) {
      const double v =
          nv == 1 ? 0.5 * (sweep.volume_min + sweep.volume_max)
                  : sweep.volume_min + (sweep.volume_max - sweep.volume_min) *
                                           i / static_cast<double>(nv - 1);
      for (double r : radii) {
        for (double mult : sweep.spring_multipliers) {
          if (static_cast<int>(combos.size()) < count) {
            combos.push_back({v, mult, r});
          }
        }
      }
    }
  } else {
    const int per_v = static_cast<int>(radii.size());
    const int nv = (count + per_v - 1) / per_v;
    for (int i = 0; i < nv && static_cast<int>(combos.size()) < count; ++i) {
      const double v =
          nv == 1 ? 0.5 * (sweep.volume_min + sweep.volume_max)
                  : sweep.volume_min + (sweep.volume_max - sweep.volume_min) *
                                           i / static_cast<double>(nv - 1);
      for (double r : radii) {
        if (static_cast<int>(combos.size()) < count) {
          combos.push_back({v, 1.0, r});
        }
      }
    }
  }

  std::vector<Combo> distinct;
  for (const Combo& c : combos) {
    bool dup = false;
    for (const Combo& o : distinct) {
      dup = dup || (o.volfrac == c.volfrac && o.mult == c.mult &&
                    o.radius == c.radius);
    }
    if (!dup) distinct.push_back(c);
  }
  if (static_cast<int>(distinct.size()) < count) {
    throw std::domain_error("sweep collapses to fewer than count specs");
  }

  std::vector<DensityField> fields;
  for (const Combo& c : distinct) {
    LowFiSpec lf;
    lf.base = base;
    lf.volume_fraction = c.volfrac;
    lf.spring_multiplier = c.mult;
    lf.filter_radius = c.radius;
    lf.max_iterations = sweep.max_iterations;
    fields.push_back(simp_optimize(lf).field);
  }

  std::vector<DensityField> unique;
  for (const DensityField& f : fields) {
    bool dup = false;
    for (const DensityField& o : unique) {
      dup = dup || (o.values() == f.values());
    }
    if (!dup) unique.push_back(f);
  }
  if (unique.size() < 2) {
    throw std::runtime_error("initial sweep produced fewer than 2 distinct fields");
  }
  if (static_cast<int>(unique.size()) < count) {
    throw std::runtime_error("initial sweep produced only " +
                             std::to_string(unique.size()) +
                             " distinct fields of " + std::to_string(count));
  }
  unique.resize(count);
  return unique;
}

DensityField random_blob_field(const Mesh& mesh, std::uint64_t seed,
                               double volume_fraction, double h) {
  if (!(volume_fraction > 0.0 && volume_fraction < 1.0)) {
    throw std::domain_error("volume fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  Eigen::VectorXd noise(mesh.node_count());
  for (std::int64_t i = 0; i < noise.size(); ++i) {
    noise[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  // a few neighbor-averaging passes act as the low-pass filter
  const int d = mesh.dimensionality();
  const int nz1 = d == 3 ? mesh.nodes_along(2) : 1;
  for (int pass = 0; pass < 4; ++pass) {
    Eigen::VectorXd next(noise.size());
    for (int z = 0; z < nz1; ++z) {
      for (int y = 0; y < mesh.nodes_along(1); ++y) {
        for (int x = 0; x < mesh.nodes_along(0); ++x) {
          double acc = 0.0;
          int cnt = 0;
          for (int dz = -1; dz <= 1; ++dz) {
            if (d == 2 && dz != 0) continue;
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) {
                const int xx = x + dx, yy = y + dy, zz = z + dz;
                if (xx < 0 || xx >= mesh.nodes_along(0) || yy < 0 ||
                    yy >= mesh.nodes_along(1) || zz < 0 || zz >= nz1) {
                  continue;
                }
                acc += noise[node_index(mesh, xx, yy, d == 3 ? zz : 0)];
                ++cnt;
              }
            }
          }
          next[node_index(mesh, x, y, d == 3 ? z : 0)] = acc / cnt;
        }
      }
    }
    noise = next;
  }
  // threshold at the volume-fraction quantile
  std::vector<double> sorted(noise.data(), noise.data() + noise.size());
  std::sort(sorted.begin(), sorted.end());
  const double cut =
      sorted[static_cast<size_t>((1.0 - volume_fraction) * (sorted.size() - 1))];
  Eigen::VectorXd rho(noise.size());
  for (std::int64_t i = 0; i < noise.size(); ++i) {
    rho[i] = noise[i] >= cut ? 1.0 : 0.0;
  }
  return normalize_field(DensityField(mesh, std::move(rho)), h).field;
}

}  // namespace ddtd
