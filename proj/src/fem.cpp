#include "ddtd/fem.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>

namespace ddtd {

void ProblemSpec::check() const {
  const int d = mesh.dimensionality();
  if (!(material.poisson_ratio > 0.0 && material.poisson_ratio < 0.5)) {
    throw std::domain_error("poisson ratio must lie in (0, 0.5)");
  }
  if (!(material.youngs_modulus > material.e_min && material.e_min > 0.0)) {
    throw std::domain_error("need youngs_modulus > e_min > 0");
  }
  if (fixed_dofs.empty() && symmetry_planes.empty()) {
    throw std::domain_error("no fixed DOFs and no symmetry planes");
  }
  const std::int64_t nn = mesh.node_count();
  auto check_ref = [&](std::int64_t node, int axis) {
    if (node < 0 || node >= nn) throw std::domain_error("node id out of range");
    if (axis < 0 || axis >= d) throw std::domain_error("axis out of range");
  };
  for (const auto& f : fixed_dofs) check_ref(f.node, f.axis);
  for (const auto& l : loads) check_ref(l.node, l.axis);
  for (const auto& s : springs) check_ref(s.node, s.axis);
  for (const auto& p : symmetry_planes) {
    if (p.axis < 0 || p.axis >= d) {
      throw std::domain_error("symmetry axis out of range");
    }
  }
  if (objective_set == ObjectiveSet::StressVolumeReaction) {
    int outputs = 0;
    for (const auto& s : springs) outputs += s.is_output_port ? 1 : 0;
    if (outputs != 1) {
      throw std::domain_error(
          "reaction objective needs exactly one output-port spring");
    }
  }
  if (!passive_void.empty() &&
      static_cast<std::int64_t>(passive_void.size()) != mesh.element_count()) {
    throw std::domain_error("passive mask size != element count");
  }
}

namespace {

// 2x2(x2) Gauss rule; B evaluated from the isoparametric shape functions
// of the square/cubic element, Jacobian = (L/2) I.
Eigen::MatrixXd stiffness_2d(double nu, double L) {
  static const double xi[4] = {-1, 1, 1, -1};
  static const double eta[4] = {-1, -1, 1, 1};
  Eigen::Matrix3d D;
  D << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, (1.0 - nu) / 2.0;
  D /= (1.0 - nu * nu);

  Eigen::MatrixXd Ke = Eigen::MatrixXd::Zero(8, 8);
  const double g = 1.0 / std::sqrt(3.0);
  for (int gx = 0; gx < 2; ++gx) {
    for (int gy = 0; gy < 2; ++gy) {
      const double x = g * (gx == 0 ? -1 : 1);
      const double y = g * (gy == 0 ? -1 : 1);
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, 8);
      for (int i = 0; i < 4; ++i) {
        const double dNdx = xi[i] * (1.0 + eta[i] * y) / 4.0 * (2.0 / L);
        const double dNdy = eta[i] * (1.0 + xi[i] * x) / 4.0 * (2.0 / L);
        B(0, 2 * i) = dNdx;
        B(1, 2 * i + 1) = dNdy;
        B(2, 2 * i) = dNdy;
        B(2, 2 * i + 1) = dNdx;
      }
      Ke += B.transpose() * D * B * (L / 2.0) * (L / 2.0);
    }
  }
  return Ke;
}

Eigen::MatrixXd stiffness_3d(double nu, double L) {
  static const double xi[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
  static const double eta[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
  static const double zeta[8] = {-1, -1, -1, -1, 1, 1, 1, 1};
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(6, 6);
  const double c = 1.0 / ((1.0 + nu) * (1.0 - 2.0 * nu));
  D(0, 0) = D(1, 1) = D(2, 2) = (1.0 - nu) * c;
  D(0, 1) = D(0, 2) = D(1, 0) = D(1, 2) = D(2, 0) = D(2, 1) = nu * c;
  D(3, 3) = D(4, 4) = D(5, 5) = (1.0 - 2.0 * nu) / 2.0 * c;

  Eigen::MatrixXd Ke = Eigen::MatrixXd::Zero(24, 24);
  const double g = 1.0 / std::sqrt(3.0);
  for (int gx = 0; gx < 2; ++gx) {
    for (int gy = 0; gy < 2; ++gy) {
      for (int gz = 0; gz < 2; ++gz) {
        const double x = g * (gx == 0 ? -1 : 1);
        const double y = g * (gy == 0 ? -1 : 1);
        const double z = g * (gz == 0 ? -1 : 1);
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 24);
        for (int i = 0; i < 8; ++i) {
          const double dNdx =
              xi[i] * (1.0 + eta[i] * y) * (1.0 + zeta[i] * z) / 8.0 * (2.0 / L);
          const double dNdy =
              eta[i] * (1.0 + xi[i] * x) * (1.0 + zeta[i] * z) / 8.0 * (2.0 / L);
          const double dNdz =
              zeta[i] * (1.0 + xi[i] * x) * (1.0 + eta[i] * y) / 8.0 * (2.0 / L);
          B(0, 3 * i) = dNdx;
          B(1, 3 * i + 1) = dNdy;
          B(2, 3 * i + 2) = dNdz;
          B(3, 3 * i) = dNdy;
          B(3, 3 * i + 1) = dNdx;
          B(4, 3 * i + 1) = dNdz;
          B(4, 3 * i + 2) = dNdy;
          B(5, 3 * i) = dNdz;
          B(5, 3 * i + 2) = dNdx;
        }
        Ke += B.transpose() * D * B * std::pow(L / 2.0, 3);
      }
    }
  }
  return Ke;
}

// centroid strain-displacement matrix
Eigen::MatrixXd centroid_b(int d, double L) {
  static const double xi[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
  static const double eta[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
  static const double zeta[8] = {-1, -1, -1, -1, 1, 1, 1, 1};
  if (d == 2) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, 8);
    for (int i = 0; i < 4; ++i) {
      const double dNdx = xi[i] / (2.0 * L);
      const double dNdy = eta[i] / (2.0 * L);
      B(0, 2 * i) = dNdx;
      B(1, 2 * i + 1) = dNdy;
      B(2, 2 * i) = dNdy;
      B(2, 2 * i + 1) = dNdx;
    }
    return B;
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 24);
  for (int i = 0; i < 8; ++i) {
    const double dNdx = xi[i] / (4.0 * L);
    const double dNdy = eta[i] / (4.0 * L);
    const double dNdz = zeta[i] / (4.0 * L);
    B(0, 3 * i) = dNdx;
    B(1, 3 * i + 1) = dNdy;
    B(2, 3 * i + 2) = dNdz;
    B(3, 3 * i) = dNdy;
    B(3, 3 * i + 1) = dNdx;
    B(4, 3 * i + 1) = dNdz;
    B(4, 3 * i + 2) = dNdy;
    B(5, 3 * i) = dNdz;
    B(5, 3 * i + 2) = dNdx;
  }
  return B;
}

Eigen::MatrixXd constitutive(int d, double nu) {
  if (d == 2) {
    Eigen::MatrixXd D(3, 3);
    D << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, (1.0 - nu) / 2.0;
    return D / (1.0 - nu * nu);
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(6, 6);
  const double c = 1.0 / ((1.0 + nu) * (1.0 - 2.0 * nu));
  D(0, 0) = D(1, 1) = D(2, 2) = (1.0 - nu) * c;
  D(0, 1) = D(0, 2) = D(1, 0) = D(1, 2) = D(2, 0) = D(2, 1) = nu * c;
  D(3, 3) = D(4, 4) = D(5, 5) = (1.0 - 2.0 * nu) / 2.0 * c;
  return D;
}

int element_corners(int d) { return d == 2 ? 4 : 8; }

// all elements of the lattice in element_index order with their corner
// node lists
void for_each_element(const Mesh& mesh,
                      const std::function<void(std::int64_t,
                                               const std::array<std::int64_t, 8>&)>& fn) {
  const int nz = mesh.dimensionality() == 3 ? mesh.extent(2) : 1;
  std::int64_t e = 0;
  for (int ez = 0; ez < nz; ++ez) {
    for (int ey = 0; ey < mesh.extent(1); ++ey) {
      for (int ex = 0; ex < mesh.extent(0); ++ex, ++e) {
        fn(e, element_nodes(mesh, ex, ey, ez));
      }
    }
  }
}

std::vector<bool> fixed_dof_mask(const ProblemSpec& spec) {
  const Mesh& mesh = spec.mesh;
  const int d = mesh.dimensionality();
  std::vector<bool> fixed(mesh.node_count() * d, false);
  for (const auto& f : spec.fixed_dofs) fixed[f.node * d + f.axis] = true;
  for (const auto& p : spec.symmetry_planes) {
    const int plane_coord = p.at_min ? 0 : mesh.extent(p.axis);
    for (std::int64_t n = 0; n < mesh.node_count(); ++n) {
      if (node_coords(mesh, n)[p.axis] == plane_coord) {
        fixed[n * d + p.axis] = true;
      }
    }
  }
  return fixed;
}

// breadth-first search over face-adjacent solid elements from the loaded
// nodes; true when some supported node is reachable
bool load_path_exists(const Mesh& mesh, const std::vector<double>& rho,
                      const ProblemSpec& spec,
                      const std::vector<bool>& fixed) {
  const int d = mesh.dimensionality();
  const std::int64_t ne = mesh.element_count();
  std::vector<bool> solid(ne);
  for (std::int64_t e = 0; e < ne; ++e) solid[e] = rho[e] >= 0.5;

  std::vector<bool> node_support(mesh.node_count(), false);
  for (std::int64_t n = 0; n < mesh.node_count(); ++n) {
    for (int a = 0; a < d; ++a) node_support[n] = node_support[n] || fixed[n * d + a];
  }

  std::vector<std::vector<std::int64_t>> node_elems(mesh.node_count());
  for_each_element(mesh, [&](std::int64_t e,
                             const std::array<std::int64_t, 8>& nodes) {
    for (int i = 0; i < element_corners(d); ++i) node_elems[nodes[i]].push_back(e);
  });

  std::deque<std::int64_t> queue;
  std::vector<bool> visited(ne, false);
  for (const auto& l : spec.loads) {
    if (l.magnitude == 0.0) continue;
    for (std::int64_t e : node_elems[l.node]) {
      if (solid[e] && !visited[e]) {
        visited[e] = true;
        queue.push_back(e);
      }
    }
  }
  if (queue.empty()) return false;

  std::vector<bool> elem_support(ne, false);
  for_each_element(mesh, [&](std::int64_t e,
                             const std::array<std::int64_t, 8>& nodes) {
    for (int i = 0; i < element_corners(d); ++i) {
      elem_support[e] = elem_support[e] || node_support[nodes[i]];
    }
  });

  const int nx = mesh.extent(0);
  const int ny = mesh.extent(1);
  const int nz = d == 3 ? mesh.extent(2) : 1;
  auto coords_of = [&](std::int64_t e) {
    std::array<int, 3> c{};
    c[0] = static_cast<int>(e % nx);
    c[1] = static_cast<int>((e / nx) % ny);
    c[2] = static_cast<int>(e / (static_cast<std::int64_t>(nx) * ny));
    return c;
  };
  while (!queue.empty()) {
    const std::int64_t e = queue.front();
    queue.pop_front();
    if (elem_support[e]) return true;
    const auto c = coords_of(e);
    const int deltas[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                              {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
    const int n_dirs = d == 2 ? 4 : 6;
    for (int k = 0; k < n_dirs; ++k) {
      const int x = c[0] + deltas[k][0];
      const int y = c[1] + deltas[k][1];
      const int z = c[2] + deltas[k][2];
      if (x < 0 || x >= nx || y < 0 || y >= ny || z < 0 || z >= nz) continue;
      const std::int64_t ne2 =
          x + static_cast<std::int64_t>(nx) * (y + static_cast<std::int64_t>(ny) * z);
      if (solid[ne2] && !visited[ne2]) {
        visited[ne2] = true;
        queue.push_back(ne2);
      }
    }
  }
  return false;
}

}  // namespace

Eigen::MatrixXd element_stiffness(const Material& material,
                                  double element_length, int dimensionality) {
  if (dimensionality == 2) {
    return stiffness_2d(material.poisson_ratio, element_length);
  }
  if (dimensionality == 3) {
    return stiffness_3d(material.poisson_ratio, element_length);
  }
  throw std::domain_error("dimensionality must be 2 or 3");
}

std::vector<double> element_densities(const DensityField& field,
                                      const ProblemSpec& spec) {
  const Mesh& mesh = spec.mesh;
  const int nc = element_corners(mesh.dimensionality());
  std::vector<double> rho(mesh.element_count());
  for_each_element(mesh, [&](std::int64_t e,
                             const std::array<std::int64_t, 8>& nodes) {
    if (!spec.passive_void.empty() && spec.passive_void[e]) {
      rho[e] = 0.0;
      return;
    }
    double sum = 0.0;
    for (int i = 0; i < nc; ++i) sum += field[nodes[i]];
    rho[e] = sum / nc;
  });
  return rho;
}

LinearSystem assemble_scaled(const std::vector<double>& element_scale,
                             const ProblemSpec& spec, double spring_scale) {
  spec.check();
  const Mesh& mesh = spec.mesh;
  if (static_cast<std::int64_t>(element_scale.size()) != mesh.element_count()) {
    throw std::invalid_argument("element scale size != element count");
  }
  const int d = mesh.dimensionality();
  const std::vector<bool> fixed = fixed_dof_mask(spec);

  LinearSystem sys;
  const std::int64_t n_dof = mesh.node_count() * d;
  sys.full_to_free.assign(n_dof, -1);
  for (std::int64_t i = 0; i < n_dof; ++i) {
    if (!fixed[i]) sys.full_to_free[i] = sys.n_free++;
  }

  const Eigen::MatrixXd Ke = element_stiffness(spec.material,
                                               mesh.element_length(), d);
  const int nc = element_corners(d);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(mesh.element_count()) * nc * nc * d * d);
  std::vector<std::int64_t> edof(nc * d);
  for_each_element(mesh, [&](std::int64_t e,
                             const std::array<std::int64_t, 8>& nodes) {
    const double scale = element_scale[e];
    for (int i = 0; i < nc; ++i) {
      for (int a = 0; a < d; ++a) edof[i * d + a] = nodes[i] * d + a;
    }
    for (int i = 0; i < nc * d; ++i) {
      const std::int64_t gi = sys.full_to_free[edof[i]];
      if (gi < 0) continue;
      for (int j = 0; j < nc * d; ++j) {
        const std::int64_t gj = sys.full_to_free[edof[j]];
        if (gj < 0) continue;
        triplets.emplace_back(gi, gj, scale * Ke(i, j));
      }
    }
  });
  for (const auto& s : spec.springs) {
    const std::int64_t g = sys.full_to_free[s.node * d + s.axis];
    if (g >= 0) triplets.emplace_back(g, g, s.stiffness * spring_scale);
  }

  sys.stiffness.resize(sys.n_free, sys.n_free);
  sys.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  sys.loads = Eigen::VectorXd::Zero(sys.n_free);
  for (const auto& l : spec.loads) {
    const std::int64_t g = sys.full_to_free[l.node * d + l.axis];
    if (g >= 0) sys.loads[g] += l.magnitude;
  }
  return sys;
}

LinearSystem assemble(const DensityField& field, const ProblemSpec& spec) {
  spec.check();
  const Mesh& mesh = spec.mesh;
  if (field.mesh() != mesh || field.size() != mesh.node_count()) {
    throw std::invalid_argument("field does not match the problem mesh");
  }
  const std::vector<double> rho = element_densities(field, spec);

  if (*std::max_element(rho.begin(), rho.end()) < 0.5) {
    LinearSystem sys;
    sys.all_void = true;
    return sys;
  }
  if (!load_path_exists(mesh, rho, spec, fixed_dof_mask(spec))) {
    LinearSystem sys;
    sys.disconnected = true;
    return sys;
  }

  const double E = spec.material.youngs_modulus;
  const double e_min = spec.material.e_min;
  std::vector<double> scale(rho.size());
  for (size_t e = 0; e < rho.size(); ++e) scale[e] = e_min + rho[e] * (E - e_min);
  return assemble_scaled(scale, spec);
}

namespace {

Eigen::VectorXd solve_free(const LinearSystem& system,
                           const Eigen::VectorXd& rhs_free, int* iterations) {
  if (system.all_void || system.disconnected) {
    throw std::logic_error("solve called on a degenerate system");
  }
  Eigen::VectorXd u_free(system.n_free);
  if (rhs_free.norm() == 0.0) {
    u_free.setZero();
    if (iterations) *iterations = 0;
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                             Eigen::Lower | Eigen::Upper>
        cg;
    cg.setTolerance(1e-8);
    cg.setMaxIterations(10 * system.n_free);
    cg.compute(system.stiffness);
    u_free = cg.solve(rhs_free);
    if (iterations) *iterations = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success) {
      throw std::runtime_error("CG failed to converge, relative residual " +
                               std::to_string(cg.error()));
    }
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(system.full_to_free.size());
  for (std::int64_t i = 0;
       i < static_cast<std::int64_t>(system.full_to_free.size()); ++i) {
    if (system.full_to_free[i] >= 0) u[i] = u_free[system.full_to_free[i]];
  }
  return u;
}

}  // namespace

Eigen::VectorXd solve(const LinearSystem& system, int* iterations) {
  return solve_free(system, system.loads, iterations);
}

Eigen::VectorXd solve_with(const LinearSystem& system,
                           const Eigen::VectorXd& full_rhs, int* iterations) {
  if (full_rhs.size() != static_cast<Eigen::Index>(system.full_to_free.size())) {
    throw std::invalid_argument("rhs length != full DOF count");
  }
  Eigen::VectorXd rhs_free = Eigen::VectorXd::Zero(system.n_free);
  for (std::int64_t i = 0;
       i < static_cast<std::int64_t>(system.full_to_free.size()); ++i) {
    if (system.full_to_free[i] >= 0) rhs_free[system.full_to_free[i]] = full_rhs[i];
  }
  return solve_free(system, rhs_free, iterations);
}

std::pair<std::vector<double>, double> von_mises(
    const Eigen::VectorXd& displacements, const DensityField& field,
    const ProblemSpec& spec) {
  const Mesh& mesh = spec.mesh;
  const int d = mesh.dimensionality();
  const std::vector<double> rho = element_densities(field, spec);
  const Eigen::MatrixXd B = centroid_b(d, mesh.element_length());
  const Eigen::MatrixXd D = constitutive(d, spec.material.poisson_ratio);
  const int nc = element_corners(d);
  const double E = spec.material.youngs_modulus;
  const double e_min = spec.material.e_min;

  std::vector<double> sv(mesh.element_count(), 0.0);
  double max_solid = -1.0;
  Eigen::VectorXd ue(nc * d);
  for_each_element(mesh, [&](std::int64_t e,
                             const std::array<std::int64_t, 8>& nodes) {
    for (int i = 0; i < nc; ++i) {
      for (int a = 0; a < d; ++a) ue[i * d + a] = displacements[nodes[i] * d + a];
    }
    const double Ee = e_min + rho[e] * (E - e_min);
    const Eigen::VectorXd sigma = Ee * (D * (B * ue));
    double v;
    if (d == 2) {
      const double sx = sigma[0], sy = sigma[1], txy = sigma[2];
      v = std::sqrt(sx * sx - sx * sy + sy * sy + 3.0 * txy * txy);
    } else {
      const double sx = sigma[0], sy = sigma[1], sz = sigma[2];
      const double txy = sigma[3], tyz = sigma[4], tzx = sigma[5];
      v = std::sqrt(0.5 * ((sx - sy) * (sx - sy) + (sy - sz) * (sy - sz) +
                           (sz - sx) * (sz - sx)) +
                    3.0 * (txy * txy + tyz * tyz + tzx * tzx));
    }
    sv[e] = v;
    if (rho[e] >= 0.5) max_solid = std::max(max_solid, v);
  });
  if (max_solid < 0.0) {
    throw std::logic_error("von_mises: no solid elements");
  }
  return {std::move(sv), max_solid};
}

double volume(const DensityField& field, const Mesh& mesh) {
  const int d = mesh.dimensionality();
  const int nc = element_corners(d);
  const double measure = std::pow(mesh.element_length(), d);
  double v = 0.0;
  for_each_element(mesh, [&](std::int64_t, const std::array<std::int64_t, 8>& nodes) {
    double sum = 0.0;
    for (int i = 0; i < nc; ++i) sum += field[nodes[i]];
    v += sum / nc * measure;
  });
  return v;
}

EvalResult evaluate(const DensityField& field, const ProblemSpec& spec) {
  EvalResult out;
  const int n_obj = spec.n_objectives();
  const LinearSystem sys = assemble(field, spec);
  if (sys.all_void || sys.disconnected) {
    out.status = EvalStatus::Degenerate;
    out.objectives = ObjectiveVector::Constant(n_obj, kSentinelObjective);
    return out;
  }
  try {
    out.solve.displacements = solve(sys, &out.solve.solver_iterations);
    out.solve.converged = true;
  } catch (const std::runtime_error&) {
    out.status = EvalStatus::SolverFailed;
    return out;
  }

  const auto [sv, max_sv] = von_mises(out.solve.displacements, field, spec);
  out.solve.max_von_mises = max_sv;

  const std::vector<double> rho = element_densities(field, spec);
  const double measure = std::pow(spec.mesh.element_length(),
                                  spec.mesh.dimensionality());
  double vol = 0.0;
  for (double r : rho) vol += r * measure;
  out.solve.volume = vol;

  out.objectives.resize(n_obj);
  out.objectives[0] = max_sv;
  out.objectives[1] = vol;
  if (spec.objective_set == ObjectiveSet::StressVolumeReaction) {
    const Spring* port = nullptr;
    for (const auto& s : spec.springs) {
      if (s.is_output_port) port = &s;
    }
    const int d = spec.mesh.dimensionality();
    const double u_out =
        out.solve.displacements[port->node * d + port->axis];
    out.solve.reaction_force = port->stiffness * port->output_sign * u_out;
    out.objectives[2] = -out.solve.reaction_force;
  }
  return out;
}

ProblemSpec make_mech2d(int nx, int ny, double element_length) {
  ProblemSpec spec;
  spec.name = "mech2d";
  spec.mesh = Mesh(nx, ny, element_length);
  spec.objective_set = ObjectiveSet::StressVolumeReaction;
  // half model of a displacement inverter, mirror plane along y = 0
  spec.symmetry_planes.push_back({1, true});
  spec.fixed_dofs.push_back({node_index(spec.mesh, 0, ny), 0});
  spec.fixed_dofs.push_back({node_index(spec.mesh, 0, ny), 1});
  spec.fixed_dofs.push_back({node_index(spec.mesh, 0, ny - 1), 0});
  spec.fixed_dofs.push_back({node_index(spec.mesh, 0, ny - 1), 1});
  spec.loads.push_back({node_index(spec.mesh, 0, 0), 0, 0.08});
  // output motion is opposite to the input push
  spec.springs.push_back({node_index(spec.mesh, nx, 0), 0, 10.0, true, -1.0});
  return spec;
}

ProblemSpec make_lbeam2d(int n, double element_length) {
  ProblemSpec spec;
  spec.name = "lbeam2d";
  spec.mesh = Mesh(n, n, element_length);
  spec.objective_set = ObjectiveSet::StressVolume;
  const int arm = std::max(1, (2 * n) / 5);  // arm width 0.4 of the side
  spec.passive_void.assign(spec.mesh.element_count(), 0);
  for (int ey = 0; ey < n; ++ey) {
    for (int ex = 0; ex < n; ++ex) {
      if (ex >= arm && ey >= arm) {
        spec.passive_void[element_index(spec.mesh, ex, ey)] = 1;
      }
    }
  }
  for (int x = 0; x <= arm; ++x) {
    spec.fixed_dofs.push_back({node_index(spec.mesh, x, n), 0});
    spec.fixed_dofs.push_back({node_index(spec.mesh, x, n), 1});
  }
  spec.loads.push_back({node_index(spec.mesh, n, arm), 1, -0.002});
  return spec;
}

ProblemSpec make_mech3d_small(int nx, int ny, int nz, double element_length) {
  ProblemSpec spec;
  spec.name = "mech3d_small";
  spec.mesh = Mesh(nx, ny, nz, element_length);
  spec.objective_set = ObjectiveSet::StressVolumeReaction;
  // quarter model: mirror planes along y = 0 and z = 0
  spec.symmetry_planes.push_back({1, true});
  spec.symmetry_planes.push_back({2, true});
  for (int z = 0; z <= nz; ++z) {
    for (int a = 0; a < 3; ++a) {
      spec.fixed_dofs.push_back({node_index(spec.mesh, 0, ny, z), a});
    }
  }
  spec.loads.push_back({node_index(spec.mesh, 0, 0, 0), 0, 0.08});
  spec.springs.push_back(
      {node_index(spec.mesh, nx, 0, 0), 0, 10.0, true, -1.0});
  return spec;
}

ProblemSpec make_problem(const std::string& name, std::array<int, 3> dims,
                         double element_length) {
  if (name == "mech2d") {
    if (dims[0] <= 0) dims = {40, 20, 0};
    return make_mech2d(dims[0], dims[1], element_length);
  }
  if (name == "lbeam2d") {
    if (dims[0] <= 0) dims = {40, 40, 0};
    return make_lbeam2d(dims[0], element_length);
  }
  if (name == "mech3d_small") {
    if (dims[0] <= 0) dims = {16, 8, 8};
    return make_mech3d_small(dims[0], dims[1], dims[2], element_length);
  }
  throw std::domain_error("unknown problem: " + name);
}

}  // namespace ddtd
