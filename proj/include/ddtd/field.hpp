#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ddtd {

/// Structured mesh of uniform square (2D) or cubic (3D) elements.
/// Node ordering is row-major with x fastest:
///   index = x + (nx+1) * (y + (ny+1) * z)
/// Meshes are immutable after construction and cheap to copy.
class Mesh {
public:
  Mesh() : Mesh(1, 1, 1.0) {}  // placeholder single-element mesh
  Mesh(int nx, int ny, double element_length);
  Mesh(int nx, int ny, int nz, double element_length);

  int dimensionality() const { return dim_; }
  int extent(int axis) const { return dims_[axis]; }
  double element_length() const { return element_length_; }

  std::int64_t node_count() const;
  std::int64_t element_count() const;

  // nodes per axis = elements per axis + 1
  int nodes_along(int axis) const { return dims_[axis] + 1; }

  bool operator==(const Mesh& other) const = default;

private:
  int dim_;
  std::array<int, 3> dims_;  // dims_[2] == 0 for 2D meshes
  double element_length_;
};

/// Row-major flat node index, x fastest. Throws std::out_of_range if any
/// coordinate lies outside [0, extent(axis)].
std::int64_t node_index(const Mesh& mesh, int x, int y, int z = 0);

/// Inverse of node_index.
std::array<int, 3> node_coords(const Mesh& mesh, std::int64_t index);

/// Row-major flat element index, x fastest. Coordinates in [0, extent - 1].
std::int64_t element_index(const Mesh& mesh, int ex, int ey, int ez = 0);

/// Node indices of one element's corners. 2D: 4 nodes counterclockwise
/// starting at (ex, ey). 3D: 8 nodes, bottom face counterclockwise then top.
/// Unused slots are -1 in 2D.
std::array<std::int64_t, 8> element_nodes(const Mesh& mesh, int ex, int ey,
                                          int ez = 0);

/// Nodal density field on a structured mesh. Values are shared and
/// immutable after construction; copies alias the same storage.
class DensityField {
public:
  DensityField() : DensityField(Mesh(), Eigen::VectorXd::Zero(4)) {}
  DensityField(Mesh mesh, Eigen::VectorXd values);

  const Mesh& mesh() const { return mesh_; }
  const Eigen::VectorXd& values() const { return *values_; }
  std::int64_t size() const { return values_->size(); }
  double operator[](std::int64_t i) const { return (*values_)[i]; }

private:
  Mesh mesh_;
  std::shared_ptr<const Eigen::VectorXd> values_;
};

struct Violation {
  enum class Kind { Range, Length };
  Kind kind;
  std::int64_t node;  // offending node, -1 for length violations
  std::string message;
};

/// All entries equal to value. Throws std::domain_error unless 0 <= value <= 1.
DensityField uniform_field(const Mesh& mesh, double value);

/// Empty result iff the value vector has the mesh's node count and every
/// entry lies in [0, 1]. Violations are returned, never thrown.
std::vector<Violation> validate(const DensityField& field);

/// A material distribution plus its evaluation record. `objectives` stays
/// empty until the sample has been evaluated; a failed solve sets
/// `evaluation_failed` instead of storing placeholder numbers.
struct Sample {
  DensityField field;
  std::optional<Eigen::VectorXd> objectives;
  int iteration_born = 0;
  std::int64_t id = 0;
  bool evaluation_failed = false;

  bool evaluated() const { return objectives.has_value(); }
};

// --- Field file I/O -------------------------------------------------------
//
// Text form:   header line "DDTD1 text", then dimensionality, extents,
//              element_length, then one full-precision value per line.
// Binary form: bytes "DDTD1 bin\n", then uint32 dimensionality, uint32
//              extents, float64 element_length and float64 values,
//              all little-endian.

void write_field_text(const std::string& path, const DensityField& field);
void write_field_binary(const std::string& path, const DensityField& field);

/// Reads either encoding, detected from the header.
DensityField read_field(const std::string& path);

/// Legacy structured-points text export (DATASET STRUCTURED_POINTS with
/// POINT_DATA scalars) for external viewers.
void write_field_vtk(const std::string& path, const DensityField& field,
                     const std::string& name = "density");

}  // namespace ddtd
