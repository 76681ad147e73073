#pragma once

#include <cstddef>
#include <vector>

#include "fdtr/core.hpp"
#include "fdtr/model.hpp"

namespace fdtr {

/// How trust-region distances are measured.
enum class NormKind {
  Euclidean,         // raw parameter units
  EuclideanUnitBox,  // after mapping [l, u] -> [0, 1] per variable
};

/// ||a - b|| in the chosen norm.
double step_norm(const DesignVector& a, const DesignVector& b,
                 const Bounds& bounds, NormKind norm);

/// U(model_predict(model, x)) without materialising the curve.
double model_objective(const LinearModel& model, const DesignVector& x,
                       const FrequencySweep& sweep);

struct SubproblemSpec {
  const LinearModel& model;
  const Bounds& bounds;
  double radius;
  NormKind norm;
  const FrequencySweep& sweep;
};

/// Minimises the min-max objective of the linear model over box ∩ ball.
///
/// The model objective is convex piecewise linear. Written in epigraph form
/// (min t subject to every in-band row <= t) the problem is solved with a
/// log-barrier Newton method. A second barrier pass picks the
/// smallest-displacement point among the optimal set, and the center itself
/// is returned when nothing beats it. The result is always feasible.
DesignVector solve_tr_subproblem(const SubproblemSpec& spec);

/// Exhaustive search over a resolution^D grid spanning box ∩ (ball's
/// bounding box); points outside the ball are skipped. Returns the first
/// (lexicographic) grid point with the smallest model objective. D <= 3.
DesignVector subproblem_oracle_grid(const SubproblemSpec& spec,
                                    std::size_t resolution);

}  // namespace fdtr
