#include "fdtr/problems.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

namespace fdtr {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(amplitude_db >= 0) || !std::isfinite(amplitude_db))
    throw Error(ErrorKind::Config, "noise amplitude must be >= 0");
  if (!(cell_fraction > 0 && cell_fraction < 1))
    throw Error(ErrorKind::Config, "noise cell_fraction must be in (0, 1)");
}

void SyntheticAntennaSpec::validate() const {
  if (!(sigma1 > 0 && sigma2 > 0 && d1_max > 0 && d2_max > 0 && w2_width > 0 &&
        l0_width > 0))
    throw Error(ErrorKind::Config, "antenna widths and depths must be positive");
  if (!(floor_db < baseline_db))
    throw Error(ErrorKind::Config, "antenna floor must lie below the baseline");
  noise.validate();
}

double noise_hash01(std::uint64_t seed, std::span<const std::int64_t> cell,
                    std::uint64_t sample) {
  std::uint64_t h = splitmix64(seed);
  for (std::int64_t k : cell) h = splitmix64(h ^ static_cast<std::uint64_t>(k));
  h = splitmix64(h ^ sample);
  return unit_from_bits(h);
}

std::vector<double> noise_overlay(const NoiseSpec& spec, const Bounds& bounds,
                                  const DesignVector& x,
                                  const FrequencySweep& sweep) {
  std::vector<double> out(sweep.size(), 0.0);
  if (spec.amplitude_db == 0.0) return out;
  if (!(spec.cell_fraction > 0))
    throw Error(ErrorKind::Config, "noise cell_fraction must be positive");
  if (x.size() != bounds.size())
    throw Error(ErrorKind::Dimension, "noise_overlay: design and bounds disagree");

  std::vector<std::int64_t> cell(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double width = spec.cell_fraction * bounds.range(d);
    cell[d] = static_cast<std::int64_t>(std::floor((x[d] - bounds.lower(d)) / width));
  }
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = spec.amplitude_db * (2.0 * noise_hash01(spec.seed, cell, j) - 1.0);
  return out;
}

ResponseCurve antenna_response(const SyntheticAntennaSpec& spec,
                               const Bounds& bounds, const DesignVector& x,
                               const FrequencySweep& sweep) {
  if (x.size() != 6)
    throw Error(ErrorKind::Dimension,
                fmt::format("antenna model takes 6 parameters, got {}", x.size()));
  const double L = x[0], l2 = x[1], W = x[2], w2 = x[3], l0 = x[4], o0 = x[5];
  const double f1 = spec.c1 / (L + 0.3 * l2 + W);
  const double f2 = spec.c2 / (l2 + o0);
  const double m1 = (w2 - spec.w2_star) / spec.w2_width;
  const double m2 = (l0 - spec.l0_star) / spec.l0_width;
  const double d1 = spec.d1_max * std::exp(-m1 * m1);
  const double d2 = spec.d2_max * std::exp(-m2 * m2);

  const auto noise = noise_overlay(spec.noise, bounds, x, sweep);
  ResponseCurve r;
  r.r_db.resize(sweep.size());
  for (std::size_t j = 0; j < sweep.size(); ++j) {
    const double f = sweep.points()[j];
    const double e1 = (f - f1) * (f - f1) / (2.0 * spec.sigma1 * spec.sigma1);
    const double e2 = (f - f2) * (f - f2) / (2.0 * spec.sigma2 * spec.sigma2);
    const double smooth =
        spec.baseline_db - d1 * std::exp(-e1) - d2 * std::exp(-e2);
    r.r_db[j] = std::max(spec.floor_db, smooth) + noise[j];
  }
  return r;
}

AntennaEvaluator::AntennaEvaluator(SyntheticAntennaSpec spec, FrequencySweep sweep)
    : spec_(std::move(spec)),
      sweep_(std::move(sweep)),
      bounds_(fixtures::antenna_bounds()) {
  spec_.validate();
}

ResponseCurve AntennaEvaluator::evaluate(const DesignVector& x) {
  return antenna_response(spec_, bounds_, x, sweep_);
}

QuadraticBowl::QuadraticBowl(std::vector<double> center, FrequencySweep sweep)
    : center_(std::move(center)), sweep_(std::move(sweep)) {
  if (center_.empty()) throw Error(ErrorKind::Dimension, "quadratic bowl needs D >= 1");
}

ResponseCurve QuadraticBowl::evaluate(const DesignVector& x) {
  if (x.size() != center_.size())
    throw Error(ErrorKind::Dimension,
                fmt::format("quadratic bowl is {}-dimensional, got {}",
                            center_.size(), x.size()));
  double s = 0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double v = x[d] - center_[d];
    s += v * v;
  }
  return ResponseCurve{std::vector<double>(sweep_.size(), s)};
}

AffineMinmax::AffineMinmax(std::uint64_t seed, std::size_t dim, std::size_t rows)
    : dim_(dim),
      rows_(rows),
      sweep_(FrequencySweep::uniform(5.0, rows > 1 ? 6.0 : 5.0, rows, 5.0, 6.0)) {
  if (dim == 0 || rows == 0)
    throw Error(ErrorKind::Config, "affine fixture needs D >= 1 and m >= 1");
  // mt19937_64 output is fixed by the standard; the distribution is ours.
  std::mt19937_64 rng(seed);
  auto next = [&] { return 2.0 * unit_from_bits(rng()) - 1.0; };
  offset_.resize(rows);
  slope_.resize(rows * dim);
  for (std::size_t j = 0; j < rows; ++j) {
    offset_[j] = next();
    for (std::size_t d = 0; d < dim; ++d) slope_[j * dim + d] = next();
  }
}

ResponseCurve AffineMinmax::evaluate(const DesignVector& x) {
  if (x.size() != dim_)
    throw Error(ErrorKind::Dimension,
                fmt::format("affine fixture is {}-dimensional, got {}", dim_, x.size()));
  ResponseCurve r;
  r.r_db.resize(rows_);
  for (std::size_t j = 0; j < rows_; ++j) {
    double v = offset_[j];
    for (std::size_t d = 0; d < dim_; ++d) v += slope_[j * dim_ + d] * x[d];
    r.r_db[j] = v;
  }
  return r;
}

namespace fixtures {

Bounds antenna_bounds() {
  return Bounds({10, 5, 3.5, 0.2, 3, 2}, {25, 25, 10, 3.2, 15, 10});
}

const std::vector<Design>& fixture_designs() {
  static const std::vector<Design> designs = {
      {"x1", {17.5, 15.1, 6.79, 1.72, 9.07, 6.05}, -2.03},
      {"x2", {22.2, 21.3, 8.79, 2.64, 12.8, 8.51}, -4.50},
      {"x3", {18.8, 16.7, 7.30, 1.96, 10.0, 6.68}, -0.34},
      {"x4", {17.9, 15.6, 6.95, 1.79, 9.37, 6.25}, -3.53},
      {"x5", {14.6, 11.2, 5.52, 1.13, 6.73, 4.49}, -2.97},
      {"x6", {13.4, 9.58, 4.99, 0.89, 5.75, 3.83}, -0.87},
      {"x7", {20.4, 18.9, 8.04, 2.30, 11.3, 7.59}, -2.04},
      {"x8", {13.6, 9.87, 5.08, 0.93, 5.92, 3.95}, -2.45},
      {"x9", {18.2, 15.9, 7.07, 1.85, 9.60, 6.40}, -6.23},
      {"x10", {21.6, 20.5, 8.56, 2.54, 12.3, 8.23}, -1.23},
  };
  return designs;
}

std::optional<Design> find_design(const std::string& name) {
  for (const auto& d : fixture_designs())
    if (d.name == name) return d;
  return std::nullopt;
}

std::vector<double> quadratic_center() {
  return {20.5, 12.0, 3.9, 0.3, 10.5, 9.8};
}

}  // namespace fixtures

Problem make_problem(const std::string& name, const NoiseSpec& noise,
                     const FrequencySweep& sweep) {
  if (name == "antenna") {
    SyntheticAntennaSpec spec;
    spec.noise = noise;
    return {std::make_unique<AntennaEvaluator>(spec, sweep),
            fixtures::antenna_bounds()};
  }
  if (name == "quadratic")
    return {std::make_unique<QuadraticBowl>(fixtures::quadratic_center(), sweep),
            fixtures::antenna_bounds()};
  throw Error(ErrorKind::Config,
              fmt::format("unknown problem '{}' (expected antenna or quadratic)", name));
}

}  // namespace fdtr
