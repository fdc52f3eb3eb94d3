#include "ddtd/initgen.hpp"

#include "ddtd/levelset.hpp"
#include "ddtd/pareto.hpp"

#include <doctest.h>

#include <cmath>

using namespace ddtd;

namespace {

double volume_fraction(const DensityField& field, const ProblemSpec& spec) {
  const auto rho = element_densities(field, spec);
  double sum = 0.0;
  std::int64_t n = 0;
  for (size_t e = 0; e < rho.size(); ++e) {
    if (!spec.passive_void.empty() && spec.passive_void[e]) continue;
    sum += rho[e];
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("simp_optimize respects the volume constraint") {
  LowFiSpec lf;
  lf.base = make_mech2d(24, 12, 0.01);
  lf.volume_fraction = 0.3;
  lf.max_iterations = 60;
  const SimpResult r = simp_optimize(lf);
  CHECK(validate(r.field).empty());
  CHECK(volume_fraction(r.field, lf.base) ==
        doctest::Approx(0.3).epsilon(0.034));  // within 1e-2 absolute
  CHECK(std::abs(volume_fraction(r.field, lf.base) - 0.3) < 1e-2);
}

TEST_CASE("simp_optimize near-solid sidestep") {
  LowFiSpec lf;
  lf.base = make_lbeam2d(16, 0.01);
  lf.volume_fraction = 0.95;
  lf.max_iterations = 15;
  const SimpResult dense = simp_optimize(lf);
  // compliance of the near-solid result is close to the solid body's
  LowFiSpec solid = lf;
  solid.max_iterations = 0;  // objective of the uniform initial field
  solid.volume_fraction = 0.999;
  const SimpResult uniform = simp_optimize(solid);
  CHECK(dense.objective ==
        doctest::Approx(uniform.objective).epsilon(0.35));
  CHECK(volume_fraction(dense.field, lf.base) > 0.85);
}

TEST_CASE("simp_optimize is deterministic") {
  LowFiSpec lf;
  lf.base = make_mech2d(16, 8, 0.01);
  lf.volume_fraction = 0.25;
  lf.max_iterations = 25;
  const SimpResult a = simp_optimize(lf, 3);
  const SimpResult b = simp_optimize(lf, 3);
  CHECK((a.field.values() - b.field.values()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simp output is normalized (band property holds)") {
  LowFiSpec lf;
  lf.base = make_lbeam2d(16, 0.01);
  lf.volume_fraction = 0.4;
  lf.max_iterations = 40;
  const SimpResult r = simp_optimize(lf);
  const double h = lf.base.mesh.element_length();
  REQUIRE(r.signed_distance.size() == r.field.size());
  for (Eigen::Index i = 0; i < r.field.size(); ++i) {
    CHECK(r.field[i] == smoothed_heaviside(r.signed_distance[i], h));
    if (std::abs(r.signed_distance[i]) > h) {
      CHECK((r.field[i] == 0.0 || r.field[i] == 1.0));
    }
  }
}

TEST_CASE("optimizer beats the uniform field on compliance") {
  LowFiSpec lf;
  lf.base = make_lbeam2d(16, 0.01);
  lf.volume_fraction = 0.35;
  lf.max_iterations = 50;
  const SimpResult opt = simp_optimize(lf);
  LowFiSpec uniform = lf;
  uniform.max_iterations = 0;
  const SimpResult base = simp_optimize(uniform);
  CHECK(opt.objective < base.objective);
  CHECK_FALSE(base.converged);  // zero iterations cannot converge
}

TEST_CASE("simp rejects invalid specs") {
  LowFiSpec lf;
  lf.base = make_mech2d(8, 4, 0.01);
  lf.volume_fraction = 0.0;
  CHECK_THROWS_AS(simp_optimize(lf), std::domain_error);
  lf.volume_fraction = 0.3;
  lf.penalization = 0.5;
  CHECK_THROWS_AS(simp_optimize(lf), std::domain_error);
}

TEST_CASE("generate_initial_set sweeps volume fractions") {
  const ProblemSpec base = make_lbeam2d(16, 0.01);
  SweepConfig sweep;
  sweep.max_iterations = 30;
  const auto fields = generate_initial_set(base, 8, sweep);
  REQUIRE(fields.size() == 8);
  double prev = -1.0;
  for (const DensityField& f : fields) {
    CHECK(validate(f).empty());
    const double v = volume_fraction(f, base);
    CHECK(v > prev);  // strictly increasing volumes along the sweep
    prev = v;
  }
}

TEST_CASE("generate_initial_set crosses spring multipliers for mechanisms") {
  const ProblemSpec base = make_mech2d(16, 8, 0.01);
  SweepConfig sweep;
  sweep.max_iterations = 25;
  const auto fields = generate_initial_set(base, 6, sweep);
  REQUIRE(fields.size() == 6);
  for (size_t i = 0; i < fields.size(); ++i) {
    for (size_t j = i + 1; j < fields.size(); ++j) {
      CHECK(fields[i].values() != fields[j].values());
    }
  }
}

TEST_CASE("generate_initial_set rejects unreachable counts") {
  const ProblemSpec base = make_lbeam2d(12, 0.01);
  CHECK_THROWS_AS(generate_initial_set(base, 1), std::domain_error);
  SweepConfig degenerate;
  degenerate.volume_min = degenerate.volume_max = 0.3;
  CHECK_THROWS_AS(generate_initial_set(base, 4, degenerate),
                  std::domain_error);
}

TEST_CASE("initial set yields a nontrivial front under evaluation") {
  const ProblemSpec base = make_mech2d(16, 8, 0.01);
  SweepConfig sweep;
  sweep.max_iterations = 25;
  const auto fields = generate_initial_set(base, 6, sweep);
  std::vector<Sample> samples;
  int ok = 0;
  for (size_t i = 0; i < fields.size(); ++i) {
    const EvalResult r = evaluate(fields[i], base);
    if (r.status == EvalStatus::Ok) {
      samples.push_back(
          {fields[i], r.objectives, 0, static_cast<std::int64_t>(i), false});
      ++ok;
    }
  }
  REQUIRE(ok >= 2);
  const auto elites = select_elites(samples, 400);
  CHECK(elites.size() >= 2);
}

TEST_CASE("simp_optimize handles a 3D mechanism") {
  LowFiSpec lf;
  lf.base = make_mech3d_small(8, 4, 4, 0.01);
  lf.volume_fraction = 0.3;
  lf.max_iterations = 20;
  const SimpResult r = simp_optimize(lf);
  CHECK(validate(r.field).empty());
  CHECK(r.field.mesh().dimensionality() == 3);
  CHECK(std::abs(volume_fraction(r.field, lf.base) - 0.3) < 2e-2);
}

TEST_CASE("random_blob_field is deterministic and normalized") {
  const Mesh mesh(24, 16, 0.01);
  const DensityField a = random_blob_field(mesh, 11, 0.4, 0.01);
  const DensityField b = random_blob_field(mesh, 11, 0.4, 0.01);
  CHECK((a.values() - b.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(validate(a).empty());
  const DensityField c = random_blob_field(mesh, 12, 0.4, 0.01);
  CHECK(a.values() != c.values());
}
