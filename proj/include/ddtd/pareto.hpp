#pragma once

#include "ddtd/field.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace ddtd {

/// Objective vectors are minimization-sense in every component.
using ObjectiveVector = Eigen::VectorXd;

/// Result of a non-dominated sort. ranks are 1-based (1 = non-dominated);
/// crowding distances are computed within each front, boundary points get
/// +infinity.
struct FrontAssignment {
  std::vector<int> ranks;
  std::vector<double> crowding;
};

/// True iff a is no worse than b in every component and strictly better in
/// at least one. Throws std::invalid_argument on length mismatch.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/// Deb-style fast non-dominated sort. Throws std::domain_error on empty
/// input.
FrontAssignment non_dominated_sort(const std::vector<ObjectiveVector>& points);

/// Crowding distance of the members of a single front. Extreme points per
/// objective get +infinity; an objective with zero range contributes zero.
std::vector<double> crowding_distance(
    const std::vector<ObjectiveVector>& front);

/// Rank-one samples, deduplicated (exactly equal objective vectors collapse
/// to the lowest id) and truncated to max_count by largest crowding
/// distance. Throws std::logic_error if any sample is unevaluated.
std::vector<Sample> select_elites(const std::vector<Sample>& samples,
                                  int max_count);

/// Lebesgue measure of the union of boxes [p, reference] over points that
/// strictly dominate the reference. Exact for 2 and 3 objectives; returns 0
/// for an empty effective set.
double hypervolume(const std::vector<ObjectiveVector>& points,
                   const ObjectiveVector& reference);

/// hypervolume / baseline_value. Throws std::domain_error unless
/// baseline_value > 0.
double normalized_hypervolume(const std::vector<ObjectiveVector>& points,
                              const ObjectiveVector& reference,
                              double baseline_value);

/// Reference point used for the whole-run indicator: componentwise worst of
/// the given objectives pushed 10% further. The margin is taken on the
/// magnitude so negative-valued objectives move away from the points too.
ObjectiveVector hypervolume_reference(const std::vector<ObjectiveVector>& points);

/// CSV export, header `id,iteration_born,J1,...,JN`, one row per sample.
void write_pareto_csv(const std::string& path,
                      const std::vector<Sample>& samples);

}  // namespace ddtd
