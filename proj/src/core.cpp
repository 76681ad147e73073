#include "fdtr/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <fmt/format.h>

namespace fdtr {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::RemoteError: return "remote_error";
    case ErrorKind::Timeout: return "timeout";
    case ErrorKind::ProcessExited: return "process_exited";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double a) { return std::isfinite(a); });
}

}  // namespace

DesignVector::DesignVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty())
    throw Error(ErrorKind::Dimension, "design vector must not be empty");
  if (!all_finite(values_))
    throw Error(ErrorKind::Config,
                "design vector has non-finite entries: " + format_vector(values_));
}

DesignVector DesignVector::with(std::size_t d, double value) const {
  std::vector<double> v = values_;
  v.at(d) = value;
  return DesignVector(std::move(v));
}

std::string format_vector(std::span<const double> v) {
  return fmt::format("[{:.17g}]", fmt::join(v, ", "));
}

Bounds::Bounds(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.empty())
    throw Error(ErrorKind::Dimension,
                fmt::format("bounds: lower has {} entries, upper has {}",
                            lower_.size(), upper_.size()));
  for (std::size_t d = 0; d < lower_.size(); ++d) {
    if (!(lower_[d] < upper_[d]) || !std::isfinite(lower_[d]) ||
        !std::isfinite(upper_[d]))
      throw Error(ErrorKind::Config,
                  fmt::format("bounds: need lower < upper in dimension {}", d));
  }
}

bool Bounds::contains(const DesignVector& x) const {
  if (x.size() != size()) return false;
  for (std::size_t d = 0; d < size(); ++d)
    if (x[d] < lower_[d] || x[d] > upper_[d]) return false;
  return true;
}

FrequencySweep::FrequencySweep(std::vector<double> points, double band_lo,
                               double band_hi)
    : points_(std::move(points)), band_lo_(band_lo), band_hi_(band_hi) {
  if (points_.empty())
    throw Error(ErrorKind::Config, "frequency sweep is empty");
  if (!all_finite(points_))
    throw Error(ErrorKind::Config, "frequency sweep has non-finite points");
  for (std::size_t j = 1; j < points_.size(); ++j)
    if (!(points_[j] > points_[j - 1]))
      throw Error(ErrorKind::Config,
                  "frequency sweep must be strictly increasing");
  if (!(band_lo_ < band_hi_))
    throw Error(ErrorKind::Config, "frequency band needs band_lo < band_hi");
  for (std::size_t j = 0; j < points_.size(); ++j)
    if (in_band(j)) band_.push_back(j);
  if (band_.empty())
    throw Error(ErrorKind::Config,
                fmt::format("no sweep sample inside band [{}, {}] GHz",
                            band_lo_, band_hi_));
}

FrequencySweep FrequencySweep::uniform(double lo, double hi, std::size_t n,
                                       double band_lo, double band_hi) {
  if (n == 0) throw Error(ErrorKind::Config, "sweep needs at least one point");
  std::vector<double> pts(n);
  if (n == 1) {
    pts[0] = lo;
  } else {
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      pts[j] = lo + step * static_cast<double>(j);
    pts[n - 1] = hi;
  }
  return FrequencySweep(std::move(pts), band_lo, band_hi);
}

FrequencySweep FrequencySweep::default_sweep() {
  return uniform(4.0, 7.0, 201, 5.0, 6.0);
}

bool ResponseCurve::all_finite() const noexcept {
  return fdtr::all_finite(r_db);
}

std::size_t EvalCache::KeyHash::operator()(const Key& k) const noexcept {
  // FNV-1a over the 64-bit words.
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint64_t w : k.bits) {
    for (int s = 0; s < 64; s += 8) {
      h ^= (w >> s) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return static_cast<std::size_t>(h);
}

EvalCache::Key EvalCache::make_key(const DesignVector& x) {
  Key k;
  k.bits.reserve(x.size());
  for (double v : x.values()) {
    // +0.0 and -0.0 are the same design.
    if (v == 0.0) v = 0.0;
    k.bits.push_back(std::bit_cast<std::uint64_t>(v));
  }
  return k;
}

const ResponseCurve* EvalCache::find(const DesignVector& x) const {
  const Key k = make_key(x);
  std::lock_guard lock(mutex_);
  auto it = table_.find(k);
  return it == table_.end() ? nullptr : &it->second;
}

const ResponseCurve& EvalCache::insert(const DesignVector& x, ResponseCurve r) {
  Key k = make_key(x);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = table_.try_emplace(std::move(k), std::move(r));
  return it->second;
}

std::size_t EvalCache::evaluations() const {
  std::lock_guard lock(mutex_);
  return table_.size();
}

std::size_t EvalCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

void EvalCache::record_hit() const {
  std::lock_guard lock(mutex_);
  ++hits_;
}

DesignVector clip_to_bounds(const DesignVector& x, const Bounds& b) {
  if (x.size() != b.size())
    throw Error(ErrorKind::Dimension,
                fmt::format("clip_to_bounds: design has {} entries, bounds {}",
                            x.size(), b.size()));
  std::vector<double> v(x.values().begin(), x.values().end());
  for (std::size_t d = 0; d < v.size(); ++d)
    v[d] = std::min(std::max(v[d], b.lower(d)), b.upper(d));
  return DesignVector(std::move(v));
}

CachedResult cached_evaluate(EvalCache& cache, Evaluator& ev,
                             const DesignVector& x) {
  if (const ResponseCurve* r = cache.find(x)) {
    cache.record_hit();
    return {r, true};
  }
  ResponseCurve r;
  try {
    r = ev.evaluate(x);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("evaluation failed at x={}: {}",
                                      format_vector(x.values()), e.what()));
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Evaluation,
                fmt::format("evaluation failed at x={}: {}",
                            format_vector(x.values()), e.what()));
  }
  if (r.size() != ev.sweep().size())
    throw Error(ErrorKind::Evaluation,
                fmt::format("evaluation at x={} returned {} samples, expected {}",
                            format_vector(x.values()), r.size(),
                            ev.sweep().size()));
  if (!r.all_finite())
    throw Error(ErrorKind::Evaluation,
                fmt::format("evaluation at x={} returned a non-finite response",
                            format_vector(x.values())));
  return {&cache.insert(x, std::move(r)), false};
}

double objective_minmax(const ResponseCurve& r, const FrequencySweep& sweep) {
  if (r.size() != sweep.size())
    throw Error(ErrorKind::Dimension,
                fmt::format("response has {} samples, sweep has {}", r.size(),
                            sweep.size()));
  const auto& band = sweep.band_indices();
  if (band.empty())
    throw Error(ErrorKind::Config, "objective band contains no samples");
  double u = r.r_db[band.front()];
  for (std::size_t j : band) u = std::max(u, r.r_db[j]);
  return u;
}

}  // namespace fdtr
