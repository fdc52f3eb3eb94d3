#pragma once

#include "ddtd/fem.hpp"
#include "ddtd/field.hpp"

#include <cstdint>
#include <vector>

namespace ddtd {

/// Low-fidelity density-based problem solved to seed the loop with regular
/// material distributions. Compliance minimization for stress problems;
/// for mechanisms, maximization of the output-port motion with an
/// artificial unit spring on the input port bounding its deformation.
struct LowFiSpec {
  ProblemSpec base;
  double volume_fraction = 0.3;
  double penalization = 3.0;   // SIMP exponent
  double filter_radius = 1.5;  // element lengths
  int max_iterations = 100;
  double move_limit = 0.2;
  double change_tol = 0.01;
  // Port springs of the low-fidelity mechanism model. The high-fidelity
  // output spring is much stiffer than the unit-modulus structure and
  // would pin the port, so the displacement objective uses soft springs.
  double output_spring = 0.1;      // times spring_multiplier
  double input_spring = 1.0;
  double spring_multiplier = 1.0;  // swept by generate_initial_set
};

struct SimpResult {
  DensityField field;  // nodal densities, already normalized
  Eigen::VectorXd signed_distance;  // distances behind the normalization
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;  // final low-fidelity objective value
};

/// Density-filtered SIMP with optimality-criteria updates. The optimized
/// element densities are averaged onto nodes, normalized through the
/// level-set scheme, and nudged so the final volume fraction matches the
/// requested one. Deterministic for a given spec and seed.
SimpResult simp_optimize(const LowFiSpec& spec, std::uint64_t seed = 0);

struct SweepConfig {
  double volume_min = 0.1;
  double volume_max = 0.5;
  // crossed with the volume sweep on mechanism problems
  std::vector<double> spring_multipliers = {0.5, 1.0, 2.0};
  // third sweep axis; one entry keeps the sweep two-dimensional
  std::vector<double> filter_radii = {1.5};
  int max_iterations = 100;
};

/// `count` distinct normalized fields from a low-fidelity parameter sweep.
/// Throws std::domain_error when the sweep cannot reach `count` distinct
/// specs and std::runtime_error when the optimized fields collapse below
/// the requested diversity.
std::vector<DensityField> generate_initial_set(const ProblemSpec& base,
                                               int count,
                                               const SweepConfig& sweep = {});

/// Fallback initial-data generator: low-pass filtered node noise
/// thresholded to the requested volume fraction, then normalized.
DensityField random_blob_field(const Mesh& mesh, std::uint64_t seed,
                               double volume_fraction, double h);

}  // namespace ddtd
