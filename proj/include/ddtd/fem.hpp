#pragma once

#include "ddtd/field.hpp"
#include "ddtd/pareto.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <string>
#include <vector>

namespace ddtd {

struct Material {
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.3;
  double e_min = 1e-6;  // ersatz stiffness floor for void elements
};

struct FixedDof {
  std::int64_t node;
  int axis;
};

struct PointLoad {
  std::int64_t node;
  int axis;
  double magnitude;
};

struct Spring {
  std::int64_t node;
  int axis;
  double stiffness;
  bool is_output_port = false;
  // +/-1: orientation along `axis` in which the intended mechanism motion
  // produces a positive reaction force
  double output_sign = 1.0;
};

/// Roller boundary condition modelling a mirror plane: the displacement
/// normal to the plane is fixed on that boundary face.
struct SymmetryPlane {
  int axis;
  bool at_min = true;
};

enum class ObjectiveSet {
  StressVolume,          // (max sigma_v, V)
  StressVolumeReaction,  // (max sigma_v, V, -F_r)
};

struct ProblemSpec {
  Mesh mesh;
  Material material;
  std::vector<FixedDof> fixed_dofs;
  std::vector<PointLoad> loads;
  std::vector<Spring> springs;
  std::vector<SymmetryPlane> symmetry_planes;
  ObjectiveSet objective_set = ObjectiveSet::StressVolume;
  // per-element mask: true = element is outside the design domain and
  // always void (used for L-shaped domains); empty = all elements active
  std::vector<std::uint8_t> passive_void;
  std::string name;

  int n_objectives() const {
    return objective_set == ObjectiveSet::StressVolumeReaction ? 3 : 2;
  }
  /// Throws std::domain_error on a spec that cannot be analyzed (no
  /// support at all, reaction objective without exactly one output port,
  /// out-of-range node ids, mask size mismatch).
  void check() const;
};

/// Unit-modulus element stiffness matrix (8x8 plane stress / 24x24 solid)
/// for a square/cubic element. Scale by the element modulus on assembly.
Eigen::MatrixXd element_stiffness(const Material& material,
                                  double element_length, int dimensionality);

/// Mean of the element's corner densities, with passive elements forced to
/// zero. Index = element_index order.
std::vector<double> element_densities(const DensityField& field,
                                      const ProblemSpec& spec);

struct LinearSystem {
  Eigen::SparseMatrix<double> stiffness;  // free DOFs only, symmetric
  Eigen::VectorXd loads;
  std::vector<std::int64_t> full_to_free;  // -1 where the DOF is fixed
  std::int64_t n_free = 0;
  bool all_void = false;      // max element density < 0.5
  bool disconnected = false;  // no solid path from loads to supports
};

/// Assembles the reduced system with ersatz interpolation
/// E(rho) = e_min + rho * (E - e_min) on the mean element density.
/// Fixed DOFs (explicit plus symmetry rollers) are eliminated
/// symmetrically; springs land on the diagonal. Degenerate fields come
/// back flagged without a matrix.
LinearSystem assemble(const DensityField& field, const ProblemSpec& spec);

/// Assembly from explicit per-element stiffness scales (the multiplier on
/// the unit-modulus element matrix). No void/connectivity screening;
/// spring stiffnesses are multiplied by spring_scale. Used by the
/// low-fidelity SIMP solver.
LinearSystem assemble_scaled(const std::vector<double>& element_scale,
                             const ProblemSpec& spec,
                             double spring_scale = 1.0);

struct SolveResult {
  Eigen::VectorXd displacements;  // full DOF vector, fixed entries zero
  double max_von_mises = 0.0;
  double volume = 0.0;
  double reaction_force = 0.0;
  int solver_iterations = 0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradient, relative residual 1e-8, at
/// most 10 * n_free iterations. Throws std::runtime_error (with the final
/// residual) if it fails to converge.
Eigen::VectorXd solve(const LinearSystem& system, int* iterations = nullptr);

/// Same solver against an arbitrary full-DOF right-hand side (fixed
/// entries are dropped). Used for adjoint solves.
Eigen::VectorXd solve_with(const LinearSystem& system,
                           const Eigen::VectorXd& full_rhs,
                           int* iterations = nullptr);

/// Element-centroid von Mises stresses and their maximum over solid
/// elements (mean density >= 0.5). 2D uses the plane-stress constitutive
/// law, 3D the full isotropic one, both at the element's ersatz modulus.
std::pair<std::vector<double>, double> von_mises(
    const Eigen::VectorXd& displacements, const DensityField& field,
    const ProblemSpec& spec);

/// sum over elements of mean nodal density times element measure.
double volume(const DensityField& field, const Mesh& mesh);

enum class EvalStatus {
  Ok,
  Degenerate,    // void or disconnected: sentinel objectives
  SolverFailed,  // no converged solution: exclude from selection
};

struct EvalResult {
  EvalStatus status = EvalStatus::Ok;
  ObjectiveVector objectives;
  SolveResult solve;
};

/// Large sentinel given to unanalyzable fields so they are dominated by
/// every real design.
constexpr double kSentinelObjective = 1e30;

/// Full objective evaluation. Pure function of (field, spec).
EvalResult evaluate(const DensityField& field, const ProblemSpec& spec);

// Built-in problems (geometry documented in the README):
//   mech2d       half-model 2D compliant inverter: input load 0.08,
//                output spring 10, fixed end, symmetry plane at y = 0
//   lbeam2d      2D L-bracket, tip load 0.002, stress/volume objectives
//   mech3d_small coarse quarter-model 3D inverter, symmetry at y = 0, z = 0
ProblemSpec make_mech2d(int nx = 40, int ny = 20, double element_length = 0.01);
ProblemSpec make_lbeam2d(int n = 40, double element_length = 0.01);
ProblemSpec make_mech3d_small(int nx = 16, int ny = 8, int nz = 8,
                              double element_length = 0.01);

/// Lookup by name; dims == {0,0,0} picks the default sizes.
ProblemSpec make_problem(const std::string& name,
                         std::array<int, 3> dims = {0, 0, 0},
                         double element_length = 0.01);

}  // namespace ddtd
