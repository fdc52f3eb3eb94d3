#pragma once

#include "ddtd/field.hpp"

#include <Eigen/Core>

namespace ddtd {

/// Nodal level-set values on the same lattice as a DensityField.
struct LevelSetField {
  Mesh mesh;
  Eigen::VectorXd values;
};

/// Transition half-width of the solid/void band (physical units). The
/// paper-scale default equals the element length.
struct BandParam {
  double h = 0.01;
};

/// phi_i = 2 * clamp(rho_i, 0, 1) - 1. Restored fields may leave [0, 1],
/// so values are clamped first.
LevelSetField density_to_levelset(const DensityField& field);

struct ReinitResult {
  LevelSetField field;
  bool had_interface = true;  // false: input was uniform-sign, values are
                              // +/- a large constant
};

/// Geometry-based reinitialization: extract the zero contour of the
/// piecewise-linear phi (marching triangles in 2D, marching tetrahedra on a
/// 6-tet hex split in 3D), then store the exact signed Euclidean distance
/// from every node to the extracted facets. Facet lookups go through a
/// uniform bin grid.
ReinitResult reinitialize(const LevelSetField& phi);

/// 0 below -h, 1 above h, and the quintic
/// 1/2 + 15/16 t - 5/8 t^3 + 3/16 t^5 (t = phi/h) inside the band.
/// Monotone, exact 0/1 at t = -/+1. Throws std::domain_error for h <= 0.
double smoothed_heaviside(double phi_value, double h);

struct NormalizeResult {
  DensityField field;
  Eigen::VectorXd signed_distance;  // reinitialized distances behind `field`
  bool had_interface = true;
};

/// Full normalization: clamp to [0, 1], convert to a level-set, recover
/// in-band distances by inverting the quintic (so an already-banded field
/// reproduces its signed distances exactly on contour-crossing edges),
/// reinitialize, and apply the smoothed Heaviside. Nodes farther than h
/// from the interface come out exactly 0 or 1. Interface-free inputs yield
/// the all-0 or all-1 field with had_interface = false.
NormalizeResult normalize_field(const DensityField& field, double h);

inline NormalizeResult normalize_field(const DensityField& field,
                                       BandParam band) {
  return normalize_field(field, band.h);
}

}  // namespace ddtd
