#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "fdtr/core.hpp"
#include "fdtr/model.hpp"
#include "fdtr/surrogate.hpp"

namespace fdtr::test {

/// Wraps a callable response and counts how often it is invoked.
class FunctionEvaluator : public Evaluator {
 public:
  using Fn = std::function<std::vector<double>(const DesignVector&)>;

  FunctionEvaluator(std::size_t dim, FrequencySweep sweep, Fn fn)
      : dim_(dim), sweep_(std::move(sweep)), fn_(std::move(fn)) {}

  std::size_t dimension() const override { return dim_; }
  const FrequencySweep& sweep() const override { return sweep_; }
  ResponseCurve evaluate(const DesignVector& x) override {
    ++calls;
    return ResponseCurve{fn_(x)};
  }

  std::atomic<int> calls{0};

 private:
  std::size_t dim_;
  FrequencySweep sweep_;
  Fn fn_;
};

/// m samples, all inside the band.
inline FrequencySweep in_band_sweep(std::size_t m) {
  return FrequencySweep::uniform(5.0, m > 1 ? 6.0 : 5.0, m, 5.0, 6.0);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

/// Owns everything a SubproblemSpec points at.
struct OwnedSubproblem {
  LinearModel model;
  Bounds bounds;
  FrequencySweep sweep;
  double radius;
  NormKind norm = NormKind::Euclidean;

  SubproblemSpec spec() const { return SubproblemSpec{model, bounds, radius, norm, sweep}; }
};

/// 1-D model with the given row slopes, center 0, zero response.
inline OwnedSubproblem line_model(std::vector<double> slopes, double radius, double lo, double hi) {
  const std::size_t m = slopes.size();
  Matrix j(m, 1);
  for (std::size_t k = 0; k < m; ++k) j(k, 0) = slopes[k];
  return OwnedSubproblem{LinearModel{DesignVector{0.0}, ResponseCurve{std::vector<double>(m, 0.0)}, j},
                         Bounds({lo}, {hi}), in_band_sweep(m), radius};
}

/// Random D=2 min-max model on the unit box: m rows with offsets and slopes
/// in [-1, 1), center uniform in the box.
inline OwnedSubproblem random_minmax(std::uint64_t seed, std::size_t m, double radius) {
  std::mt19937_64 rng(seed);
  Matrix j(m, 2);
  std::vector<double> r(m);
  for (std::size_t k = 0; k < m; ++k) {
    r[k] = uniform(rng, -1, 1);
    j(k, 0) = uniform(rng, -1, 1);
    j(k, 1) = uniform(rng, -1, 1);
  }
  const DesignVector c{uniform(rng, 0, 1), uniform(rng, 0, 1)};
  return OwnedSubproblem{LinearModel{c, ResponseCurve{r}, j}, Bounds({0, 0}, {1, 1}),
                         in_band_sweep(m), radius};
}

}  // namespace fdtr::test
