#include "ddtd/field.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddtd {

namespace {

void check_extents(int dim, const std::array<int, 3>& dims, double len) {
  for (int a = 0; a < dim; ++a) {
    if (dims[a] < 1) {
      throw std::domain_error("mesh extent along axis " + std::to_string(a) +
                              " must be >= 1, got " + std::to_string(dims[a]));
    }
  }
  if (!(len > 0.0)) {
    throw std::domain_error("element length must be > 0");
  }
}

}  // namespace

Mesh::Mesh(int nx, int ny, double element_length)
    : dim_(2), dims_{nx, ny, 0}, element_length_(element_length) {
  check_extents(2, dims_, element_length);
}

Mesh::Mesh(int nx, int ny, int nz, double element_length)
    : dim_(3), dims_{nx, ny, nz}, element_length_(element_length) {
  check_extents(3, dims_, element_length);
}

std::int64_t Mesh::node_count() const {
  std::int64_t n = 1;
  for (int a = 0; a < dim_; ++a) n *= dims_[a] + 1;
  return n;
}

std::int64_t Mesh::element_count() const {
  std::int64_t n = 1;
  for (int a = 0; a < dim_; ++a) n *= dims_[a];
  return n;
}

std::int64_t node_index(const Mesh& mesh, int x, int y, int z) {
  const std::array<int, 3> c{x, y, z};
  for (int a = 0; a < 3; ++a) {
    const int hi = a < mesh.dimensionality() ? mesh.extent(a) : 0;
    if (c[a] < 0 || c[a] > hi) {
      throw std::out_of_range("node coordinate " + std::to_string(c[a]) +
                              " outside [0, " + std::to_string(hi) +
                              "] on axis " + std::to_string(a));
    }
  }
  const std::int64_t nx1 = mesh.nodes_along(0);
  const std::int64_t ny1 = mesh.dimensionality() >= 2 ? mesh.nodes_along(1) : 1;
  return x + nx1 * (y + ny1 * static_cast<std::int64_t>(z));
}

std::array<int, 3> node_coords(const Mesh& mesh, std::int64_t index) {
  if (index < 0 || index >= mesh.node_count()) {
    throw std::out_of_range("node index out of range");
  }
  const std::int64_t nx1 = mesh.nodes_along(0);
  const std::int64_t ny1 = mesh.nodes_along(1);
  std::array<int, 3> c{};
  c[0] = static_cast<int>(index % nx1);
  c[1] = static_cast<int>((index / nx1) % ny1);
  c[2] = static_cast<int>(index / (nx1 * ny1));
  return c;
}

std::int64_t element_index(const Mesh& mesh, int ex, int ey, int ez) {
  const std::array<int, 3> c{ex, ey, ez};
  for (int a = 0; a < 3; ++a) {
    const int hi = a < mesh.dimensionality() ? mesh.extent(a) - 1 : 0;
    if (c[a] < 0 || c[a] > hi) {
      throw std::out_of_range("element coordinate out of range");
    }
  }
  const std::int64_t nx = mesh.extent(0);
  const std::int64_t ny = mesh.dimensionality() >= 2 ? mesh.extent(1) : 1;
  return ex + nx * (ey + ny * static_cast<std::int64_t>(ez));
}

std::array<std::int64_t, 8> element_nodes(const Mesh& mesh, int ex, int ey,
                                          int ez) {
  std::array<std::int64_t, 8> n{};
  if (mesh.dimensionality() == 2) {
    n[0] = node_index(mesh, ex, ey);
    n[1] = node_index(mesh, ex + 1, ey);
    n[2] = node_index(mesh, ex + 1, ey + 1);
    n[3] = node_index(mesh, ex, ey + 1);
    n[4] = n[5] = n[6] = n[7] = -1;
  } else {
    n[0] = node_index(mesh, ex, ey, ez);
    n[1] = node_index(mesh, ex + 1, ey, ez);
    n[2] = node_index(mesh, ex + 1, ey + 1, ez);
    n[3] = node_index(mesh, ex, ey + 1, ez);
    n[4] = node_index(mesh, ex, ey, ez + 1);
    n[5] = node_index(mesh, ex + 1, ey, ez + 1);
    n[6] = node_index(mesh, ex + 1, ey + 1, ez + 1);
    n[7] = node_index(mesh, ex, ey + 1, ez + 1);
  }
  return n;
}

DensityField::DensityField(Mesh mesh, Eigen::VectorXd values)
    : mesh_(mesh),
      values_(std::make_shared<const Eigen::VectorXd>(std::move(values))) {}

DensityField uniform_field(const Mesh& mesh, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::domain_error("uniform_field value must lie in [0, 1]");
  }
  return DensityField(mesh,
                      Eigen::VectorXd::Constant(mesh.node_count(), value));
}

std::vector<Violation> validate(const DensityField& field) {
  std::vector<Violation> out;
  const std::int64_t expected = field.mesh().node_count();
  if (field.size() != expected) {
    out.push_back({Violation::Kind::Length, -1,
                   "value vector has length " + std::to_string(field.size()) +
                       ", mesh has " + std::to_string(expected) + " nodes"});
    return out;
  }
  for (std::int64_t i = 0; i < expected; ++i) {
    const double v = field[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      out.push_back({Violation::Kind::Range, i,
                     "node " + std::to_string(i) + " has density " +
                         std::to_string(v) + " outside [0, 1]"});
    }
  }
  return out;
}

// --- I/O --------------------------------------------------------------

namespace {

constexpr const char* kTextMagic = "DDTD1 text";
constexpr const char* kBinaryMagic = "DDTD1 bin\n";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Mesh make_mesh(int dim, const std::array<int, 3>& e, double len) {
  return dim == 2 ? Mesh(e[0], e[1], len) : Mesh(e[0], e[1], e[2], len);
}

}  // namespace

void write_field_text(const std::string& path, const DensityField& field) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const Mesh& m = field.mesh();
  out << kTextMagic << '\n' << m.dimensionality() << '\n';
  for (int a = 0; a < m.dimensionality(); ++a) {
    out << m.extent(a) << (a + 1 < m.dimensionality() ? ' ' : '\n');
  }
  out << format_double(m.element_length()) << '\n';
  for (std::int64_t i = 0; i < field.size(); ++i) {
    out << format_double(field[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_field_binary(const std::string& path, const DensityField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const Mesh& m = field.mesh();
  out.write(kBinaryMagic, 10);
  const std::uint32_t dim = static_cast<std::uint32_t>(m.dimensionality());
  out.write(reinterpret_cast<const char*>(&dim), 4);
  for (int a = 0; a < m.dimensionality(); ++a) {
    const std::uint32_t e = static_cast<std::uint32_t>(m.extent(a));
    out.write(reinterpret_cast<const char*>(&e), 4);
  }
  const double len = m.element_length();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(reinterpret_cast<const char*>(field.values().data()),
            static_cast<std::streamsize>(field.size() * 8));
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

DensityField read_field_text(std::istream& in, const std::string& path) {
  std::string line;
  std::getline(in, line);  // magic, already checked
  int dim = 0;
  in >> dim;
  if (dim != 2 && dim != 3) {
    throw std::runtime_error(path + ": bad dimensionality");
  }
  std::array<int, 3> e{0, 0, 0};
  for (int a = 0; a < dim; ++a) in >> e[a];
  double len = 0.0;
  in >> len;
  if (!in) throw std::runtime_error(path + ": truncated header");
  const Mesh mesh = make_mesh(dim, e, len);
  Eigen::VectorXd values(mesh.node_count());
  for (std::int64_t i = 0; i < values.size(); ++i) {
    if (!(in >> values[i])) {
      throw std::runtime_error(path + ": truncated value list");
    }
  }
  return DensityField(mesh, std::move(values));
}

DensityField read_field_binary(std::istream& in, const std::string& path) {
  char magic[10];
  in.read(magic, 10);
  std::uint32_t dim = 0;
  in.read(reinterpret_cast<char*>(&dim), 4);
  if (dim != 2 && dim != 3) {
    throw std::runtime_error(path + ": bad dimensionality");
  }
  std::array<int, 3> e{0, 0, 0};
  for (std::uint32_t a = 0; a < dim; ++a) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    e[a] = static_cast<int>(v);
  }
  double len = 0.0;
  in.read(reinterpret_cast<char*>(&len), 8);
  if (!in) throw std::runtime_error(path + ": truncated header");
  const Mesh mesh = make_mesh(static_cast<int>(dim), e, len);
  Eigen::VectorXd values(mesh.node_count());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * 8));
  if (!in) throw std::runtime_error(path + ": truncated value list");
  return DensityField(mesh, std::move(values));
}

}  // namespace

DensityField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char head[10] = {};
  in.read(head, 10);
  in.seekg(0);
  if (std::memcmp(head, kBinaryMagic, 10) == 0) {
    return read_field_binary(in, path);
  }
  if (std::memcmp(head, kTextMagic, 10) == 0) {
    return read_field_text(in, path);
  }
  throw std::runtime_error(path + ": not a DDTD field file");
}

void write_field_vtk(const std::string& path, const DensityField& field,
                     const std::string& name) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const Mesh& m = field.mesh();
  const int nz = m.dimensionality() == 3 ? m.nodes_along(2) : 1;
  out << "# vtk DataFile Version 3.0\n"
      << "ddtd density field\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << m.nodes_along(0) << ' ' << m.nodes_along(1) << ' '
      << nz << '\n'
      << "ORIGIN 0 0 0\n"
      << "SPACING " << format_double(m.element_length()) << ' '
      << format_double(m.element_length()) << ' '
      << format_double(m.element_length()) << '\n'
      << "POINT_DATA " << field.size() << '\n'
      << "SCALARS " << name << " double 1\n"
      << "LOOKUP_TABLE default\n";
  for (std::int64_t i = 0; i < field.size(); ++i) {
    out << format_double(field[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ddtd
