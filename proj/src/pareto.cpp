#include "ddtd/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace ddtd {

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("objective vectors differ in length");
  }
  bool strictly_better = false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly_better = true;
  }
  return strictly_better;
}

FrontAssignment non_dominated_sort(
    const std::vector<ObjectiveVector>& points) {
  const int n = static_cast<int>(points.size());
  if (n == 0) throw std::domain_error("non_dominated_sort: empty input");

  // Deb's fast non-dominated sort: dominance counts plus dominated lists.
  std::vector<std::vector<int>> dominated(n);
  std::vector<int> dom_count(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (dominates(points[i], points[j])) {
        dominated[i].push_back(j);
        ++dom_count[j];
      } else if (dominates(points[j], points[i])) {
        dominated[j].push_back(i);
        ++dom_count[i];
      }
    }
  }

  FrontAssignment fa;
  fa.ranks.assign(n, 0);
  fa.crowding.assign(n, 0.0);

  std::vector<int> current;
  for (int i = 0; i < n; ++i) {
    if (dom_count[i] == 0) current.push_back(i);
  }
  int rank = 1;
  while (!current.empty()) {
    std::vector<ObjectiveVector> front_points;
    front_points.reserve(current.size());
    for (int i : current) {
      fa.ranks[i] = rank;
      front_points.push_back(points[i]);
    }
    const std::vector<double> cd = crowding_distance(front_points);
    for (size_t k = 0; k < current.size(); ++k) fa.crowding[current[k]] = cd[k];

    std::vector<int> next;
    for (int i : current) {
      for (int j : dominated[i]) {
        if (--dom_count[j] == 0) next.push_back(j);
      }
    }
    current = std::move(next);
    ++rank;
  }
  return fa;
}

std::vector<double> crowding_distance(
    const std::vector<ObjectiveVector>& front) {
  const int n = static_cast<int>(front.size());
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  const double inf = std::numeric_limits<double>::infinity();
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  const Eigen::Index n_obj = front[0].size();
  std::vector<int> order(n);
  for (Eigen::Index m = 0; m < n_obj; ++m) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return front[a][m] < front[b][m];
    });
    const double range = front[order[n - 1]][m] - front[order[0]][m];
    if (range <= 0.0) continue;  // zero-range objective contributes nothing
    dist[order[0]] = inf;
    dist[order[n - 1]] = inf;
    for (int k = 1; k + 1 < n; ++k) {
      if (dist[order[k]] == inf) continue;
      dist[order[k]] +=
          (front[order[k + 1]][m] - front[order[k - 1]][m]) / range;
    }
  }
  return dist;
}

std::vector<Sample> select_elites(const std::vector<Sample>& samples,
                                  int max_count) {
  if (max_count < 1) throw std::domain_error("max_count must be >= 1");
  for (const Sample& s : samples) {
    if (!s.evaluated()) {
      throw std::logic_error("select_elites: sample " + std::to_string(s.id) +
                             " is unevaluated");
    }
  }

  // Collapse exactly equal objective vectors, keeping the lowest id.
  std::vector<int> kept;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    bool duplicate = false;
    for (int& j : kept) {
      if (samples[j].objectives->size() == samples[i].objectives->size() &&
          *samples[j].objectives == *samples[i].objectives) {
        if (samples[i].id < samples[j].id) j = i;
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(i);
  }

  std::vector<ObjectiveVector> points;
  points.reserve(kept.size());
  for (int i : kept) points.push_back(*samples[i].objectives);
  const FrontAssignment fa = non_dominated_sort(points);

  std::vector<int> rank_one;
  for (size_t k = 0; k < kept.size(); ++k) {
    if (fa.ranks[k] == 1) rank_one.push_back(static_cast<int>(k));
  }
  if (static_cast<int>(rank_one.size()) > max_count) {
    std::stable_sort(rank_one.begin(), rank_one.end(), [&](int a, int b) {
      if (fa.crowding[a] != fa.crowding[b]) {
        return fa.crowding[a] > fa.crowding[b];
      }
      return samples[kept[a]].id < samples[kept[b]].id;
    });
    rank_one.resize(max_count);
  }

  std::vector<Sample> out;
  out.reserve(rank_one.size());
  for (int k : rank_one) out.push_back(samples[kept[k]]);
  std::sort(out.begin(), out.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });
  return out;
}

namespace {

struct Point2 {
  double x, y;
};

// Sweep over the staircase of mutually non-dominated 2D points.
double hv2d(std::vector<Point2> pts, double ref_x, double ref_y) {
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  double volume = 0.0;
  double best_y = std::numeric_limits<double>::infinity();
  std::vector<Point2> stairs;
  for (const Point2& p : pts) {
    if (p.y < best_y) {
      stairs.push_back(p);
      best_y = p.y;
    }
  }
  for (size_t i = 0; i < stairs.size(); ++i) {
    const double next_x = i + 1 < stairs.size() ? stairs[i + 1].x : ref_x;
    volume += (next_x - stairs[i].x) * (ref_y - stairs[i].y);
  }
  return volume;
}

}  // namespace

double hypervolume(const std::vector<ObjectiveVector>& points,
                   const ObjectiveVector& reference) {
  const Eigen::Index n_obj = reference.size();
  if (n_obj != 2 && n_obj != 3) {
    throw std::domain_error("hypervolume supports 2 or 3 objectives");
  }
  std::vector<ObjectiveVector> eff;
  for (const ObjectiveVector& p : points) {
    if (p.size() != n_obj) {
      throw std::invalid_argument("point/reference length mismatch");
    }
    if ((p.array() < reference.array()).all()) eff.push_back(p);
  }
  if (eff.empty()) return 0.0;

  if (n_obj == 2) {
    std::vector<Point2> pts(eff.size());
    for (size_t i = 0; i < eff.size(); ++i) pts[i] = {eff[i][0], eff[i][1]};
    return hv2d(std::move(pts), reference[0], reference[1]);
  }

  // 3D: slice along the third objective. The union's cross-section is
  // constant between consecutive z values, so the volume is the sum of
  // slab height times the 2D hypervolume of points active in the slab.
  std::sort(eff.begin(), eff.end(),
            [](const ObjectiveVector& a, const ObjectiveVector& b) {
              return a[2] < b[2];
            });
  std::vector<double> zs;
  for (const ObjectiveVector& p : eff) {
    if (zs.empty() || p[2] > zs.back()) zs.push_back(p[2]);
  }
  zs.push_back(reference[2]);

  double volume = 0.0;
  size_t next = 0;
  std::vector<Point2> active;
  for (size_t s = 0; s + 1 < zs.size(); ++s) {
    while (next < eff.size() && eff[next][2] <= zs[s]) {
      active.push_back({eff[next][0], eff[next][1]});
      ++next;
    }
    volume += (zs[s + 1] - zs[s]) * hv2d(active, reference[0], reference[1]);
  }
  return volume;
}

double normalized_hypervolume(const std::vector<ObjectiveVector>& points,
                              const ObjectiveVector& reference,
                              double baseline_value) {
  if (!(baseline_value > 0.0)) {
    throw std::domain_error("hypervolume baseline must be positive");
  }
  return hypervolume(points, reference) / baseline_value;
}

ObjectiveVector hypervolume_reference(
    const std::vector<ObjectiveVector>& points) {
  if (points.empty()) {
    throw std::domain_error("hypervolume_reference: empty point set");
  }
  ObjectiveVector ref = points[0];
  for (const ObjectiveVector& p : points) {
    if (p.size() != ref.size()) {
      throw std::invalid_argument("objective vectors differ in length");
    }
    ref = ref.array().max(p.array());
  }
  for (Eigen::Index i = 0; i < ref.size(); ++i) {
    ref[i] += 0.1 * std::max(std::abs(ref[i]), 1e-9);
  }
  return ref;
}

void write_pareto_csv(const std::string& path,
                      const std::vector<Sample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const Eigen::Index n_obj =
      samples.empty() || !samples[0].evaluated() ? 0
                                                 : samples[0].objectives->size();
  out << "id,iteration_born";
  for (Eigen::Index j = 0; j < n_obj; ++j) out << ",J" << (j + 1);
  out << '\n';
  char buf[32];
  for (const Sample& s : samples) {
    out << s.id << ',' << s.iteration_born;
    if (s.evaluated()) {
      for (Eigen::Index j = 0; j < s.objectives->size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", (*s.objectives)[j]);
        out << ',' << buf;
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ddtd
