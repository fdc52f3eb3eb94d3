#include "ddtd/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ddtd {

namespace {

constexpr double kNoInterfaceValue = 1e30;

double quintic(double t) {
  const double t2 = t * t;
  return 0.5 + t * (15.0 / 16.0 + t2 * (-5.0 / 8.0 + t2 * (3.0 / 16.0)));
}

// Inverse of the quintic on [-1, 1] by bisection; the quintic is strictly
// monotone inside the band. Saturated inputs map to the band edge.
double quintic_inverse(double rho) {
  if (rho <= 0.0) return -1.0;
  if (rho >= 1.0) return 1.0;
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = quintic(mid) - rho;
    if (f == 0.0) return mid;
    if (f < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

using Vec3 = Eigen::Vector3d;

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Ericson, Real-Time Collision Detection: closest point on a triangle.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return (p - (a + v * ab)).norm();
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return (p - (a + w * ac)).norm();
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (p - (a + v * ab + w * ac)).norm();
}

// A contour facet: a segment in 2D (c unused == b), a triangle in 3D.
struct Facet {
  Vec3 a, b, c;
  bool triangle;
  double distance(const Vec3& p) const {
    return triangle ? point_triangle_distance(p, a, b, c)
                    : point_segment_distance(p, a, b);
  }
};

Vec3 interp_zero(const Vec3& pa, double fa, const Vec3& pb, double fb) {
  // signs differ, so fa - fb is bounded away from zero
  const double t = fa / (fa - fb);
  return pa + t * (pb - pa);
}

// Marching squares on one cell, corners counterclockwise. Crossings sit on
// the cell-boundary edges only, where a unit-gradient level set keeps both
// endpoints inside the band. Saddle cells split by the sign of the corner
// average.
void march_square(const Vec3 p[4], const double f[4],
                  std::vector<Facet>& out) {
  bool s[4];
  int positives = 0;
  for (int i = 0; i < 4; ++i) {
    s[i] = f[i] >= 0.0;
    positives += s[i] ? 1 : 0;
  }
  if (positives == 0 || positives == 4) return;

  Vec3 cross[4];
  bool has[4];
  for (int e = 0; e < 4; ++e) {
    const int a = e, b = (e + 1) % 4;
    has[e] = s[a] != s[b];
    if (has[e]) cross[e] = interp_zero(p[a], f[a], p[b], f[b]);
  }

  if (positives == 2 && s[0] == s[2]) {
    // saddle: all four edges cross; connect around the isolated corners
    const double fc = 0.25 * (f[0] + f[1] + f[2] + f[3]);
    if ((fc >= 0.0) == s[0]) {
      out.push_back({cross[0], cross[1], cross[1], false});  // corner 1
      out.push_back({cross[2], cross[3], cross[3], false});  // corner 3
    } else {
      out.push_back({cross[3], cross[0], cross[0], false});  // corner 0
      out.push_back({cross[1], cross[2], cross[2], false});  // corner 2
    }
    return;
  }

  Vec3 pts[2];
  int np = 0;
  for (int e = 0; e < 4 && np < 2; ++e) {
    if (has[e]) pts[np++] = cross[e];
  }
  out.push_back({pts[0], pts[1], pts[1], false});
}

// Marching tetrahedra: 3 or 4 crossing edges make one or two triangles.
void march_tet(const Vec3 p[4], const double f[4], std::vector<Facet>& out) {
  int pos[4], neg[4], npos = 0, nneg = 0;
  for (int i = 0; i < 4; ++i) {
    if (f[i] >= 0.0) {
      pos[npos++] = i;
    } else {
      neg[nneg++] = i;
    }
  }
  if (npos == 0 || nneg == 0) return;
  if (npos == 1 || nneg == 1) {
    const int lone = npos == 1 ? pos[0] : neg[0];
    const int* rest = npos == 1 ? neg : pos;
    Vec3 q[3];
    for (int i = 0; i < 3; ++i) {
      q[i] = interp_zero(p[lone], f[lone], p[rest[i]], f[rest[i]]);
    }
    out.push_back({q[0], q[1], q[2], true});
  } else {
    // 2 vs 2: quad with cyclic corners (u,w) (u,x) (v,x) (v,w)
    const int u = pos[0], v = pos[1], w = neg[0], x = neg[1];
    const Vec3 q0 = interp_zero(p[u], f[u], p[w], f[w]);
    const Vec3 q1 = interp_zero(p[u], f[u], p[x], f[x]);
    const Vec3 q2 = interp_zero(p[v], f[v], p[x], f[x]);
    const Vec3 q3 = interp_zero(p[v], f[v], p[w], f[w]);
    out.push_back({q0, q1, q2, true});
    out.push_back({q0, q2, q3, true});
  }
}

std::vector<Facet> extract_contour(const Mesh& mesh,
                                   const Eigen::VectorXd& phi) {
  const double len = mesh.element_length();
  std::vector<Facet> facets;
  if (mesh.dimensionality() == 2) {
    for (int ey = 0; ey < mesh.extent(1); ++ey) {
      for (int ex = 0; ex < mesh.extent(0); ++ex) {
        const auto n = element_nodes(mesh, ex, ey);
        const double f[4] = {phi[n[0]], phi[n[1]], phi[n[2]], phi[n[3]]};
        if ((f[0] >= 0) == (f[1] >= 0) && (f[1] >= 0) == (f[2] >= 0) &&
            (f[2] >= 0) == (f[3] >= 0)) {
          continue;
        }
        const Vec3 p[4] = {{ex * len, ey * len, 0.0},
                           {(ex + 1) * len, ey * len, 0.0},
                           {(ex + 1) * len, (ey + 1) * len, 0.0},
                           {ex * len, (ey + 1) * len, 0.0}};
        march_square(p, f, facets);
      }
    }
  } else {
    // 6-tet split sharing the 0-6 diagonal; face diagonals match between
    // neighbouring cells, so the contour is watertight
    static const int kTets[6][4] = {{0, 1, 2, 6}, {0, 2, 3, 6}, {0, 3, 7, 6},
                                    {0, 7, 4, 6}, {0, 4, 5, 6}, {0, 5, 1, 6}};
    for (int ez = 0; ez < mesh.extent(2); ++ez) {
      for (int ey = 0; ey < mesh.extent(1); ++ey) {
        for (int ex = 0; ex < mesh.extent(0); ++ex) {
          const auto n = element_nodes(mesh, ex, ey, ez);
          bool mixed = false;
          const bool s0 = phi[n[0]] >= 0;
          for (int i = 1; i < 8; ++i) mixed |= (phi[n[i]] >= 0) != s0;
          if (!mixed) continue;
          Vec3 p[8];
          double f[8];
          for (int i = 0; i < 8; ++i) {
            const auto c = node_coords(mesh, n[i]);
            p[i] = {c[0] * len, c[1] * len, c[2] * len};
            f[i] = phi[n[i]];
          }
          for (const auto& tet : kTets) {
            const Vec3 tp[4] = {p[tet[0]], p[tet[1]], p[tet[2]], p[tet[3]]};
            const double tf[4] = {f[tet[0]], f[tet[1]], f[tet[2]], f[tet[3]]};
            march_tet(tp, tf, facets);
          }
        }
      }
    }
  }
  return facets;
}

// Facets binned on a coarsened cell grid; queries expand Chebyshev rings
// until the best distance provably cannot improve. The coarse bins keep
// far-field queries cheap without affecting exactness.
class FacetGrid {
public:
  static constexpr int kCoarsen = 8;  // bin edge, in element lengths

  FacetGrid(const Mesh& mesh, std::vector<Facet> facets)
      : mesh_(mesh), facets_(std::move(facets)) {
    bin_len_ = mesh.element_length() * kCoarsen;
    nx_ = (mesh.extent(0) + kCoarsen - 1) / kCoarsen;
    ny_ = mesh.dimensionality() >= 2
              ? (mesh.extent(1) + kCoarsen - 1) / kCoarsen
              : 1;
    nz_ = mesh.dimensionality() == 3
              ? (mesh.extent(2) + kCoarsen - 1) / kCoarsen
              : 1;
    bins_.resize(static_cast<size_t>(nx_) * ny_ * nz_);
    for (int i = 0; i < static_cast<int>(facets_.size()); ++i) {
      const Facet& f = facets_[i];
      Vec3 lo = f.a.cwiseMin(f.b), hi = f.a.cwiseMax(f.b);
      if (f.triangle) {
        lo = lo.cwiseMin(f.c);
        hi = hi.cwiseMax(f.c);
      }
      const int x0 = clamp_cell(cell_of(lo[0]), nx_);
      const int x1 = clamp_cell(cell_of(hi[0]), nx_);
      const int y0 = clamp_cell(cell_of(lo[1]), ny_);
      const int y1 = clamp_cell(cell_of(hi[1]), ny_);
      const int z0 = clamp_cell(cell_of(lo[2]), nz_);
      const int z1 = clamp_cell(cell_of(hi[2]), nz_);
      for (int z = z0; z <= z1; ++z) {
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            bins_[bin_id(x, y, z)].push_back(i);
          }
        }
      }
    }
  }

  double nearest(const Vec3& p) const {
    const int cx = clamp_cell(cell_of(p[0]), nx_);
    const int cy = clamp_cell(cell_of(p[1]), ny_);
    const int cz = clamp_cell(cell_of(p[2]), nz_);
    const int max_ring = std::max({nx_, ny_, nz_}) + 1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= max_ring; ++r) {
      scan_ring(p, cx, cy, cz, r, best);
      // cells on ring r+1 are at least r * bin_len_ away
      if (best <= static_cast<double>(r) * bin_len_) break;
    }
    return best;
  }

private:
  static int clamp_cell(int c, int n) { return std::clamp(c, 0, n - 1); }

  int cell_of(double coord) const {
    return static_cast<int>(std::floor(coord / bin_len_));
  }

  size_t bin_id(int x, int y, int z) const {
    return static_cast<size_t>(x) +
           static_cast<size_t>(nx_) * (static_cast<size_t>(y) +
                                       static_cast<size_t>(ny_) * z);
  }

  void scan_cell(const Vec3& p, int x, int y, int z, double& best) const {
    if (x < 0 || x >= nx_ || y < 0 || y >= ny_ || z < 0 || z >= nz_) return;
    for (int i : bins_[bin_id(x, y, z)]) {
      best = std::min(best, facets_[i].distance(p));
    }
  }

  void scan_ring(const Vec3& p, int cx, int cy, int cz, int r,
                 double& best) const {
    if (r == 0) {
      scan_cell(p, cx, cy, cz, best);
      return;
    }
    const int zlo = nz_ == 1 ? 0 : cz - r;
    const int zhi = nz_ == 1 ? 0 : cz + r;
    for (int z = zlo; z <= zhi; ++z) {
      const bool z_face = nz_ > 1 && (z == cz - r || z == cz + r);
      for (int y = cy - r; y <= cy + r; ++y) {
        const bool y_face = y == cy - r || y == cy + r;
        if (z_face || y_face) {
          for (int x = cx - r; x <= cx + r; ++x) scan_cell(p, x, y, z, best);
        } else {
          scan_cell(p, cx - r, y, z, best);
          scan_cell(p, cx + r, y, z, best);
        }
      }
    }
  }

  Mesh mesh_;
  std::vector<Facet> facets_;
  std::vector<std::vector<int>> bins_;
  double bin_len_ = 1.0;
  int nx_, ny_, nz_;
};

}  // namespace

LevelSetField density_to_levelset(const DensityField& field) {
  LevelSetField out{field.mesh(), Eigen::VectorXd(field.size())};
  for (std::int64_t i = 0; i < field.size(); ++i) {
    out.values[i] = 2.0 * std::clamp(field[i], 0.0, 1.0) - 1.0;
  }
  return out;
}

ReinitResult reinitialize(const LevelSetField& phi) {
  const Mesh& mesh = phi.mesh;
  if (phi.values.size() != mesh.node_count()) {
    throw std::invalid_argument("level-set vector length != node count");
  }
  std::vector<Facet> facets = extract_contour(mesh, phi.values);
  ReinitResult out{LevelSetField{mesh, Eigen::VectorXd(phi.values.size())},
                   true};
  if (facets.empty()) {
    out.had_interface = false;
    const double sign = phi.values.size() > 0 && phi.values[0] >= 0 ? 1 : -1;
    out.field.values.setConstant(sign * kNoInterfaceValue);
    return out;
  }

  const FacetGrid grid(mesh, std::move(facets));
  const double len = mesh.element_length();
  for (std::int64_t i = 0; i < phi.values.size(); ++i) {
    const auto c = node_coords(mesh, i);
    const Vec3 p{c[0] * len, c[1] * len, c[2] * len};
    const double d = grid.nearest(p);
    out.field.values[i] = phi.values[i] >= 0.0 ? d : -d;
  }
  return out;
}

double smoothed_heaviside(double phi_value, double h) {
  if (!(h > 0.0)) throw std::domain_error("band half-width h must be > 0");
  if (phi_value < -h) return 0.0;
  if (phi_value > h) return 1.0;
  return quintic(phi_value / h);
}

NormalizeResult normalize_field(const DensityField& field, double h) {
  if (!(h > 0.0)) throw std::domain_error("band half-width h must be > 0");
  const Mesh& mesh = field.mesh();
  if (field.size() != mesh.node_count()) {
    throw std::invalid_argument("density vector length != node count");
  }

  // Band recovery: map densities back to signed distances through the
  // quintic, so crossing edges of an already-banded field carry their true
  // distances and the extracted contour does not drift.
  Eigen::VectorXd recovered(field.size());
  for (std::int64_t i = 0; i < field.size(); ++i) {
    recovered[i] = h * quintic_inverse(std::clamp(field[i], 0.0, 1.0));
  }

  ReinitResult re = reinitialize(LevelSetField{mesh, recovered});
  Eigen::VectorXd rho(field.size());
  for (std::int64_t i = 0; i < field.size(); ++i) {
    rho[i] = smoothed_heaviside(re.field.values[i], h);
  }
  return {DensityField(mesh, std::move(rho)), std::move(re.field.values),
          re.had_interface};
}

}  // namespace ddtd
