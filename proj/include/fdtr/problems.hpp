#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fdtr/core.hpp"

namespace fdtr {

/// Piecewise-constant pseudo mesh noise. Each variable's range is cut into
/// cells of width cell_fraction * (u - l); inside a cell the noise is
/// constant, across cells it is independent.
struct NoiseSpec {
  double amplitude_db = 0.5;
  double cell_fraction = 0.001;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Two-resonance reflection model over x = [L, l2, W, w2, l0, o0] (mm).
struct SyntheticAntennaSpec {
  double c1 = 140.0;  // GHz*mm
  double c2 = 130.0;  // GHz*mm
  double sigma1 = 0.25;  // GHz
  double sigma2 = 0.35;  // GHz
  double d1_max = 25.0;  // dB
  double d2_max = 20.0;  // dB
  double w2_star = 1.2;  // mm
  double l0_star = 10.0; // mm
  double w2_width = 0.8; // mm
  double l0_width = 4.0; // mm
  double baseline_db = -1.0;
  double floor_db = -40.0;
  NoiseSpec noise;

  void validate() const;
};

/// Hash of (seed, cell index, sample index) mapped to [0, 1).
double noise_hash01(std::uint64_t seed, std::span<const std::int64_t> cell,
                    std::uint64_t sample);

std::vector<double> noise_overlay(const NoiseSpec& spec, const Bounds& bounds,
                                  const DesignVector& x,
                                  const FrequencySweep& sweep);

ResponseCurve antenna_response(const SyntheticAntennaSpec& spec,
                               const Bounds& bounds, const DesignVector& x,
                               const FrequencySweep& sweep);

class AntennaEvaluator final : public Evaluator {
 public:
  AntennaEvaluator(SyntheticAntennaSpec spec, FrequencySweep sweep);

  std::size_t dimension() const override { return 6; }
  const FrequencySweep& sweep() const override { return sweep_; }
  ResponseCurve evaluate(const DesignVector& x) override;

 private:
  SyntheticAntennaSpec spec_;
  FrequencySweep sweep_;
  Bounds bounds_;
};

/// Response sum_d (x_d - c_d)^2, identical at every frequency sample.
class QuadraticBowl final : public Evaluator {
 public:
  QuadraticBowl(std::vector<double> center, FrequencySweep sweep);

  std::size_t dimension() const override { return center_.size(); }
  const FrequencySweep& sweep() const override { return sweep_; }
  ResponseCurve evaluate(const DesignVector& x) override;

 private:
  std::vector<double> center_;
  FrequencySweep sweep_;
};

/// m seeded affine rows r_j(x) = a_j + g_j . x with a_j, g_j uniform in
/// [-1, 1). Sweep has m points in [5, 6] GHz, all inside the band.
class AffineMinmax final : public Evaluator {
 public:
  AffineMinmax(std::uint64_t seed, std::size_t dim, std::size_t rows);

  std::size_t dimension() const override { return dim_; }
  const FrequencySweep& sweep() const override { return sweep_; }
  ResponseCurve evaluate(const DesignVector& x) override;

  double offset(std::size_t j) const { return offset_[j]; }
  double slope(std::size_t j, std::size_t d) const { return slope_[j * dim_ + d]; }

 private:
  std::size_t dim_;
  std::size_t rows_;
  std::vector<double> offset_;
  std::vector<double> slope_;
  FrequencySweep sweep_;
};

/// Uniform double in [0, 1) from a 64-bit generator output.
inline double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

namespace fixtures {

Bounds antenna_bounds();
inline constexpr double band_lo_ghz = 5.0;
inline constexpr double band_hi_ghz = 6.0;

struct Design {
  std::string name;            // "x1" ... "x10"
  std::array<double, 6> x;     // [L, l2, W, w2, l0, o0] in mm
  double reported_objective;   // printed U(x) from the reference EM model
};

const std::vector<Design>& fixture_designs();
std::optional<Design> find_design(const std::string& name);

/// Geometry relations of the reference EM model; not used by the synthetic
/// response.
struct EmModelMetadata {
  double o_over_L = 0.22;
  double ls_over_L = 0.1;
  double l1_mm = 1.5;
  double w1_mm = 2.5;
  double ws_mm = 0.5;
  double w0_mm = 1.7;
};
inline constexpr EmModelMetadata em_metadata{};

/// Minimiser of the built-in "quadratic" problem.
std::vector<double> quadratic_center();

}  // namespace fixtures

/// A named built-in problem: evaluator plus its box.
struct Problem {
  std::unique_ptr<Evaluator> evaluator;
  Bounds bounds;
};

/// "antenna" (noise from `noise`) or "quadratic"; both use the antenna box.
Problem make_problem(const std::string& name, const NoiseSpec& noise,
                     const FrequencySweep& sweep);

}  // namespace fdtr
