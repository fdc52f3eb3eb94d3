#include "ddtd/pareto.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace ddtd;

namespace {

ObjectiveVector ov(std::initializer_list<double> v) {
  ObjectiveVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// O(N^2 M) front peeling straight from the rank definition:
// rank(p) = 1 + max rank among points dominating p.
std::vector<int> brute_force_ranks(const std::vector<ObjectiveVector>& pts) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> ranks(n, 0);
  int assigned = 0, rank = 1;
  while (assigned < n) {
    std::vector<int> front;
    for (int i = 0; i < n; ++i) {
      if (ranks[i] != 0) continue;
      bool dominated = false;
      for (int j = 0; j < n && !dominated; ++j) {
        dominated = ranks[j] == 0 && j != i && dominates(pts[j], pts[i]);
      }
      if (!dominated) front.push_back(i);
    }
    for (int i : front) ranks[i] = rank;
    assigned += static_cast<int>(front.size());
    ++rank;
  }
  return ranks;
}

std::vector<ObjectiveVector> random_points(std::mt19937_64& rng, int n,
                                           int m_obj, int value_range = 0) {
  std::vector<ObjectiveVector> pts(n);
  for (auto& p : pts) {
    p.resize(m_obj);
    for (int j = 0; j < m_obj; ++j) {
      if (value_range > 0) {
        p[j] = static_cast<double>(rng() % value_range);  // ties likely
      } else {
        p[j] = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      }
    }
  }
  return pts;
}

double monte_carlo_hv(const std::vector<ObjectiveVector>& pts,
                      const ObjectiveVector& ref, int n_samples,
                      std::mt19937_64& rng, double& std_error) {
  ObjectiveVector lo = ref;
  for (const auto& p : pts) lo = lo.cwiseMin(p);
  double box = 1.0;
  for (Eigen::Index j = 0; j < ref.size(); ++j) box *= ref[j] - lo[j];
  int hits = 0;
  ObjectiveVector x(ref.size());
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index j = 0; j < ref.size(); ++j) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x[j] = lo[j] + u * (ref[j] - lo[j]);
    }
    for (const auto& p : pts) {
      if ((p.array() <= x.array()).all()) {
        ++hits;
        break;
      }
    }
  }
  const double frac = static_cast<double>(hits) / n_samples;
  std_error = box * std::sqrt(frac * (1.0 - frac) / n_samples);
  return box * frac;
}

}  // namespace

TEST_CASE("dominates follows the strict Pareto definition") {
  CHECK(dominates(ov({1, 2}), ov({2, 3})));
  CHECK_FALSE(dominates(ov({1, 2}), ov({1, 2})));
  CHECK_FALSE(dominates(ov({1, 3}), ov({2, 2})));
  CHECK(dominates(ov({1, 2}), ov({1, 3})));
  CHECK_THROWS_AS(dominates(ov({1, 2}), ov({1, 2, 3})),
                  std::invalid_argument);
}

TEST_CASE("dominance is a strict partial order on random points") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto pts = random_points(rng, 3, 3, trial % 2 ? 4 : 0);
    const auto &a = pts[0], &b = pts[1], &c = pts[2];
    CHECK_FALSE(dominates(a, a));                       // irreflexive
    if (dominates(a, b)) CHECK_FALSE(dominates(b, a));  // asymmetric
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
  }
}

TEST_CASE("non_dominated_sort spot cases") {
  const auto fa = non_dominated_sort({ov({1, 2}), ov({2, 1}), ov({2, 2})});
  CHECK(fa.ranks == std::vector<int>{1, 1, 2});
  CHECK(non_dominated_sort({ov({1, 1})}).ranks == std::vector<int>{1});
  const auto chain =
      non_dominated_sort({ov({1, 1}), ov({2, 2}), ov({3, 3})});
  CHECK(chain.ranks == std::vector<int>{1, 2, 3});
  CHECK_THROWS_AS(non_dominated_sort({}), std::domain_error);
}

TEST_CASE("non_dominated_sort matches the brute-force definition") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 60);
    const int m_obj = 2 + static_cast<int>(rng() % 2);
    // integer grids produce plenty of duplicates and deep fronts
    const auto pts = random_points(rng, n, m_obj, trial % 2 ? 5 : 0);
    const auto fa = non_dominated_sort(pts);
    CHECK(fa.ranks == brute_force_ranks(pts));
  }
}

TEST_CASE("crowding distance spot cases") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(crowding_distance({ov({1, 2}), ov({2, 1})}) ==
        std::vector<double>{inf, inf});
  CHECK(crowding_distance({ov({1, 1})}) == std::vector<double>{inf});
  const auto d = crowding_distance({ov({1, 3}), ov({2, 2}), ov({3, 1})});
  CHECK(d[0] == inf);
  CHECK(d[2] == inf);
  CHECK(d[1] == doctest::Approx(2.0).epsilon(1e-12));
}

namespace {

Sample make_sample(std::int64_t id, const ObjectiveVector& o) {
  const Mesh mesh(1, 1, 1.0);
  Sample s{uniform_field(mesh, 1.0), o, 0, id, false};
  return s;
}

}  // namespace

TEST_CASE("select_elites keeps the rank-one set") {
  std::vector<Sample> samples{make_sample(0, ov({1, 2})),
                              make_sample(1, ov({2, 1})),
                              make_sample(2, ov({2, 2}))};
  const auto elites = select_elites(samples, 400);
  REQUIRE(elites.size() == 2);
  CHECK(elites[0].id == 0);
  CHECK(elites[1].id == 1);
}

TEST_CASE("select_elites collapses duplicates to the lowest id") {
  std::vector<Sample> samples;
  for (int i = 0; i < 5; ++i) samples.push_back(make_sample(4 - i, ov({1, 1})));
  const auto elites = select_elites(samples, 400);
  REQUIRE(elites.size() == 1);
  CHECK(elites[0].id == 0);
}

TEST_CASE("select_elites truncates by crowding distance") {
  std::mt19937_64 rng(23);
  std::vector<Sample> samples;
  for (int i = 0; i < 500; ++i) {
    // points on a simplex: mutually non-dominated
    const double a = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    samples.push_back(make_sample(i, ov({a, 1.0 - a})));
  }
  const auto elites = select_elites(samples, 400);
  CHECK(elites.size() == 400);
  for (size_t i = 0; i < elites.size(); ++i) {
    for (size_t j = 0; j < elites.size(); ++j) {
      if (i != j) {
        CHECK_FALSE(dominates(*elites[i].objectives, *elites[j].objectives));
      }
    }
  }
}

TEST_CASE("select_elites rejects unevaluated samples") {
  std::vector<Sample> samples{make_sample(0, ov({1, 2}))};
  samples.push_back(samples[0]);
  samples[1].objectives.reset();
  samples[1].id = 1;
  CHECK_THROWS_AS(select_elites(samples, 10), std::logic_error);
}

TEST_CASE("hypervolume hand-computable values") {
  CHECK(hypervolume({ov({1, 1})}, ov({2, 2})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hypervolume({ov({1, 2}), ov({2, 1})}, ov({3, 3})) ==
        doctest::Approx(3.0).epsilon(1e-12));
  CHECK(hypervolume({ov({1, 2}), ov({2, 1}), ov({1.5, 1.5})}, ov({3, 3})) ==
        doctest::Approx(3.25).epsilon(1e-12));
  // points at or beyond the reference are excluded
  CHECK(hypervolume({ov({2, 2})}, ov({2, 2})) == 0.0);
  CHECK(hypervolume({}, ov({1, 1})) == 0.0);
}

TEST_CASE("hypervolume 3D matches inclusion-exclusion on two boxes") {
  // box(0,0,1) = 2*2*2 = 8, box(1,1,0) = 1*1*3 = 3, overlap = 1*1*2 = 2
  CHECK(hypervolume({ov({0, 0, 1}), ov({1, 1, 0})}, ov({2, 2, 3})) ==
        doctest::Approx(8.0 + 3.0 - 2.0).epsilon(1e-12));
}

TEST_CASE("hypervolume is monotone and ignores dominated points") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int m_obj = 2 + static_cast<int>(rng() % 2);
    auto pts = random_points(rng, 10, m_obj);
    const ObjectiveVector ref = ObjectiveVector::Constant(m_obj, 1.25);
    const double hv = hypervolume(pts, ref);
    auto more = pts;
    more.push_back(random_points(rng, 1, m_obj)[0]);
    CHECK(hypervolume(more, ref) >= hv - 1e-12);

    // removing a dominated point changes nothing
    int dominated = -1;
    for (size_t i = 0; i < pts.size() && dominated < 0; ++i) {
      for (size_t j = 0; j < pts.size(); ++j) {
        if (i != j && dominates(pts[j], pts[i])) {
          dominated = static_cast<int>(i);
          break;
        }
      }
    }
    if (dominated >= 0) {
      auto fewer = pts;
      fewer.erase(fewer.begin() + dominated);
      CHECK(hypervolume(fewer, ref) == doctest::Approx(hv).epsilon(1e-12));
    }
  }
}

TEST_CASE("hypervolume agrees with Monte-Carlo on random 3D sets") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const auto pts = random_points(rng, n, 3);
    const ObjectiveVector ref = ObjectiveVector::Constant(3, 1.1);
    double se = 0.0;
    const double mc = monte_carlo_hv(pts, ref, 200000, rng, se);
    const double exact = hypervolume(pts, ref);
    CHECK(std::abs(exact - mc) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("normalized_hypervolume scales by the baseline") {
  CHECK(normalized_hypervolume({ov({1, 1})}, ov({2, 2}), 0.5) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(normalized_hypervolume({ov({1, 1})}, ov({2, 2}), 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(normalized_hypervolume({}, ov({2, 2}), 1.0) == 0.0);
  CHECK_THROWS_AS(normalized_hypervolume({ov({1, 1})}, ov({2, 2}), 0.0),
                  std::domain_error);
}

TEST_CASE("hypervolume_reference stays strictly dominated by the points") {
  const auto ref =
      hypervolume_reference({ov({1.0, -2.0}), ov({0.5, -1.0}), ov({2.0, -4.0})});
  CHECK(ref[0] == doctest::Approx(2.2));
  CHECK(ref[1] > -1.0);  // margin moves away from the best point
  for (const auto& p :
       {ov({1.0, -2.0}), ov({0.5, -1.0}), ov({2.0, -4.0})}) {
    CHECK((p.array() < ref.array()).all());
  }
}

TEST_CASE("pareto csv export has the documented header") {
  const auto path =
      (std::filesystem::temp_directory_path() / "ddtd_pareto.csv").string();
  write_pareto_csv(path, {make_sample(3, ov({1, 2, 3}))});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "id,iteration_born,J1,J2,J3");
  std::getline(in, line);
  CHECK(line == "3,0,1,2,3");
}
