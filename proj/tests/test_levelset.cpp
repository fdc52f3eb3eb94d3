#include "ddtd/levelset.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ddtd;

namespace {

// rho = 1 inside a circle of radius r centered at (cx, cy), physical units
DensityField circle_field(const Mesh& mesh, double cx, double cy, double r) {
  Eigen::VectorXd rho(mesh.node_count());
  const double len = mesh.element_length();
  for (int y = 0; y <= mesh.extent(1); ++y) {
    for (int x = 0; x <= mesh.extent(0); ++x) {
      const double dx = x * len - cx, dy = y * len - cy;
      rho[node_index(mesh, x, y)] = dx * dx + dy * dy <= r * r ? 1.0 : 0.0;
    }
  }
  return DensityField(mesh, std::move(rho));
}

DensityField random_smooth_field(const Mesh& mesh, std::mt19937_64& rng) {
  Eigen::VectorXd v(mesh.node_count());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }
  // neighbor smoothing, then stretch around 0.5 so restore-style overshoot
  // (values beyond [0,1]) appears too
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd next = v;
    for (int y = 0; y <= mesh.extent(1); ++y) {
      for (int x = 0; x <= mesh.extent(0); ++x) {
        double acc = 0.0;
        int cnt = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx, yy = y + dy;
            if (xx < 0 || xx > mesh.extent(0) || yy < 0 || yy > mesh.extent(1))
              continue;
            acc += v[node_index(mesh, xx, yy)];
            ++cnt;
          }
        }
        next[node_index(mesh, x, y)] = acc / cnt;
      }
    }
    v = next;
  }
  v = ((v.array() - 0.5) * 4.0 + 0.5).matrix();
  return DensityField(mesh, std::move(v));
}

}  // namespace

TEST_CASE("density_to_levelset is 2 rho - 1 with clamping") {
  const Mesh mesh(2, 1, 1.0);
  Eigen::VectorXd rho(mesh.node_count());
  rho << 0.5, 1.0, 0.0, 1.3, -0.2, 0.25;
  const LevelSetField phi = density_to_levelset(DensityField(mesh, rho));
  CHECK(phi.values[0] == 0.0);
  CHECK(phi.values[1] == 1.0);
  CHECK(phi.values[2] == -1.0);
  CHECK(phi.values[3] == 1.0);   // clamped
  CHECK(phi.values[4] == -1.0);  // clamped
  CHECK(phi.values[5] == doctest::Approx(-0.5));
}

TEST_CASE("smoothed_heaviside endpoints, midpoint and band") {
  const double h = 0.01;
  CHECK(smoothed_heaviside(0.0, h) == 0.5);
  CHECK(smoothed_heaviside(h, h) == 1.0);    // dyadic quintic sums exactly
  CHECK(smoothed_heaviside(-h, h) == 0.0);
  CHECK(smoothed_heaviside(2 * h, h) == 1.0);
  CHECK(smoothed_heaviside(-2 * h, h) == 0.0);
  CHECK_THROWS_AS(smoothed_heaviside(0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(smoothed_heaviside(0.0, -1.0), std::domain_error);
}

TEST_CASE("smoothed_heaviside is nondecreasing") {
  std::mt19937_64 rng(5);
  const double h = 0.02;
  for (int trial = 0; trial < 1000; ++trial) {
    double a = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 6 * h;
    double b = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 6 * h;
    if (a > b) std::swap(a, b);
    CHECK(smoothed_heaviside(a, h) <= smoothed_heaviside(b, h));
  }
}

TEST_CASE("reinitialize: vertical stripe gives distance to the plane") {
  // rho = 1 for x < 0.5, 0 for x > 0.5 on a 40x8 grid with len 0.025:
  // interface at x = 0.5 exactly between nodes 19 and 20
  const Mesh mesh(40, 8, 0.025);
  const double len = mesh.element_length();
  Eigen::VectorXd rho(mesh.node_count());
  for (int y = 0; y <= 8; ++y) {
    for (int x = 0; x <= 40; ++x) {
      rho[node_index(mesh, x, y)] = x * len < 0.5 ? 1.0 : 0.0;
    }
  }
  const ReinitResult re =
      reinitialize(density_to_levelset(DensityField(mesh, rho)));
  REQUIRE(re.had_interface);
  for (int y = 0; y <= 8; ++y) {
    for (int x = 0; x <= 40; ++x) {
      const double expected = 0.5 - x * len;  // signed distance to x = 0.5
      CHECK(std::abs(re.field.values[node_index(mesh, x, y)] - expected) <
            len);
    }
  }
}

TEST_CASE("reinitialize: circle gives signed distance to the ring") {
  const Mesh mesh(48, 48, 1.0 / 48.0);
  const double r = 16.0 / 48.0;
  const DensityField f = circle_field(mesh, 0.5, 0.5, r);
  const ReinitResult re = reinitialize(density_to_levelset(f));
  REQUIRE(re.had_interface);
  const double len = mesh.element_length();
  for (int y = 0; y <= 48; ++y) {
    for (int x = 0; x <= 48; ++x) {
      const double dist =
          std::hypot(x * len - 0.5, y * len - 0.5);
      const double expected = r - dist;
      CHECK(std::abs(re.field.values[node_index(mesh, x, y)] - expected) <
            len);
    }
  }
}

TEST_CASE("reinitialize is nearly idempotent on band nodes") {
  const Mesh mesh(48, 48, 1.0 / 48.0);
  const DensityField f = circle_field(mesh, 0.5, 0.5, 16.0 / 48.0);
  const LevelSetField first =
      reinitialize(density_to_levelset(f)).field;
  const LevelSetField second = reinitialize(first).field;
  const double len = mesh.element_length();
  for (Eigen::Index i = 0; i < first.values.size(); ++i) {
    if (std::abs(first.values[i]) <= len) {
      CHECK(std::abs(second.values[i] - first.values[i]) < 0.1 * len);
    }
  }
}

TEST_CASE("reinitialize flags interface-free fields") {
  const Mesh mesh(4, 4, 0.1);
  const ReinitResult pos =
      reinitialize(density_to_levelset(uniform_field(mesh, 1.0)));
  CHECK_FALSE(pos.had_interface);
  CHECK(pos.field.values.minCoeff() > 1.0);  // large positive constant
  const ReinitResult neg =
      reinitialize(density_to_levelset(uniform_field(mesh, 0.0)));
  CHECK_FALSE(neg.had_interface);
  CHECK(neg.field.values.maxCoeff() < -1.0);
}

TEST_CASE("normalize_field: banded outside, open inside, range [0,1]") {
  std::mt19937_64 rng(9);
  const Mesh mesh(30, 20, 0.01);
  const double h = 0.01;
  for (int trial = 0; trial < 10; ++trial) {
    const DensityField f = random_smooth_field(mesh, rng);
    const NormalizeResult out = normalize_field(f, h);
    if (!out.had_interface) continue;
    REQUIRE(out.signed_distance.size() == out.field.size());
    for (Eigen::Index i = 0; i < out.field.size(); ++i) {
      const double v = out.field[i];
      const double d = out.signed_distance[i];
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (std::abs(d) > h) {
        CHECK((v == 0.0 || v == 1.0));  // exact outside the band
      } else if (std::abs(d) < 0.999 * h) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
      // value and distance stay consistent through the quintic
      CHECK(v == smoothed_heaviside(d, h));
    }
  }
}

TEST_CASE("normalize_field keeps the solid/void classification of a circle") {
  const Mesh mesh(48, 48, 1.0 / 48.0);
  const double r = 16.0 / 48.0;
  const double len = mesh.element_length();
  const DensityField f = circle_field(mesh, 0.5, 0.5, r);
  const NormalizeResult out = normalize_field(f, len);
  REQUIRE(out.had_interface);
  for (int y = 0; y <= 48; ++y) {
    for (int x = 0; x <= 48; ++x) {
      const double dist = std::hypot(x * len - 0.5, y * len - 0.5);
      if (std::abs(dist - r) <= len) continue;  // transition neighborhood
      const double v = out.field[node_index(mesh, x, y)];
      if (dist < r) {
        CHECK(v > 0.5);
      } else {
        CHECK(v < 0.5);
      }
    }
  }
}

TEST_CASE("normalize_field handles uniform fields") {
  const Mesh mesh(5, 5, 0.01);
  const NormalizeResult solid = normalize_field(uniform_field(mesh, 1.0), 0.01);
  CHECK_FALSE(solid.had_interface);
  CHECK(solid.field.values().isConstant(1.0));
  const NormalizeResult void_out =
      normalize_field(uniform_field(mesh, 0.0), 0.01);
  CHECK_FALSE(void_out.had_interface);
  CHECK(void_out.field.values().isConstant(0.0));
}

TEST_CASE("normalize_field is idempotent within contour-extraction error") {
  SUBCASE("banded tilted plane: crossing interpolation is exact") {
    const Mesh mesh(40, 40, 1.0 / 40.0);
    const double h = mesh.element_length();
    // half-space below the line y = 0.52 + 0.3 (x - 0.5)
    Eigen::VectorXd rho(mesh.node_count());
    const double len = mesh.element_length();
    const double cos_t = 1.0 / std::sqrt(1.0 + 0.3 * 0.3);
    for (int y = 0; y <= 40; ++y) {
      for (int x = 0; x <= 40; ++x) {
        const double boundary = 0.52 + 0.3 * (x * len - 0.5);
        const double d = (boundary - y * len) * cos_t;
        rho[node_index(mesh, x, y)] = smoothed_heaviside(d, h);
      }
    }
    const DensityField once =
        normalize_field(DensityField(mesh, rho), h).field;
    const DensityField twice = normalize_field(once, h).field;
    // skip the four-element margin where the open contour meets the domain
    // boundary: the distance field is conical around the polyline endpoints
    double max_err = 0.0;
    for (int y = 4; y <= 36; ++y) {
      for (int x = 4; x <= 36; ++x) {
        const auto i = node_index(mesh, x, y);
        max_err = std::max(max_err, std::abs(twice[i] - once[i]));
      }
    }
    CHECK(max_err < 1e-3);
  }

  SUBCASE("banded circle: error shrinks with curvature resolution") {
    // crossing-edge interpolation of an exact distance field misplaces the
    // contour by O(len^2 / r); at r = 240 elements the density change
    // stays under 1e-3. Binary inputs are excluded here: their extracted
    // contour is a midpoint polygon whose staircase kinks are themselves
    // an O(0.04 len) contour-extraction error.
    const Mesh mesh(512, 512, 1.0 / 512.0);
    const double h = mesh.element_length();
    const double r = 0.47;
    Eigen::VectorXd rho(mesh.node_count());
    for (int y = 0; y <= 512; ++y) {
      for (int x = 0; x <= 512; ++x) {
        const double dist = std::hypot(x * h - 0.5, y * h - 0.5);
        rho[node_index(mesh, x, y)] = smoothed_heaviside(r - dist, h);
      }
    }
    const DensityField once =
        normalize_field(DensityField(mesh, rho), h).field;
    const DensityField twice = normalize_field(once, h).field;
    CHECK((twice.values() - once.values()).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("normalize_field on a 3D sphere") {
  const Mesh mesh(16, 16, 16, 1.0 / 16.0);
  const double len = mesh.element_length();
  const double r = 5.0 / 16.0;
  Eigen::VectorXd rho(mesh.node_count());
  for (int z = 0; z <= 16; ++z) {
    for (int y = 0; y <= 16; ++y) {
      for (int x = 0; x <= 16; ++x) {
        const double dist = std::sqrt(std::pow(x * len - 0.5, 2) +
                                      std::pow(y * len - 0.5, 2) +
                                      std::pow(z * len - 0.5, 2));
        rho[node_index(mesh, x, y, z)] = dist <= r ? 1.0 : 0.0;
      }
    }
  }
  const ReinitResult re =
      reinitialize(density_to_levelset(DensityField(mesh, rho)));
  REQUIRE(re.had_interface);
  for (int z = 0; z <= 16; ++z) {
    for (int y = 0; y <= 16; ++y) {
      for (int x = 0; x <= 16; ++x) {
        const double dist = std::sqrt(std::pow(x * len - 0.5, 2) +
                                      std::pow(y * len - 0.5, 2) +
                                      std::pow(z * len - 0.5, 2));
        CHECK(std::abs(re.field.values[node_index(mesh, x, y, z)] -
                       (r - dist)) < len);
      }
    }
  }
}
