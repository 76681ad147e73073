#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fdtr/error.hpp"

namespace fdtr {

/// Point in the D-dimensional design space. Always non-empty and finite.
class DesignVector {
 public:
  DesignVector() = default;
  explicit DesignVector(std::vector<double> values);
  DesignVector(std::initializer_list<double> values)
      : DesignVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t d) const { return values_[d]; }
  std::span<const double> values() const noexcept { return values_; }

  /// Copy with entry d replaced; the result is validated again.
  DesignVector with(std::size_t d, double value) const;

  bool operator==(const DesignVector& other) const = default;

 private:
  std::vector<double> values_;
};

std::string format_vector(std::span<const double> v);

/// Box constraints with lower[d] < upper[d].
class Bounds {
 public:
  Bounds(std::vector<double> lower, std::vector<double> upper);

  std::size_t size() const noexcept { return lower_.size(); }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }
  double lower(std::size_t d) const { return lower_[d]; }
  double upper(std::size_t d) const { return upper_[d]; }
  double range(std::size_t d) const { return upper_[d] - lower_[d]; }

  bool contains(const DesignVector& x) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Frequency samples (GHz, strictly increasing) plus the objective band.
class FrequencySweep {
 public:
  FrequencySweep(std::vector<double> points, double band_lo, double band_hi);

  /// n uniform samples on [lo, hi].
  static FrequencySweep uniform(double lo, double hi, std::size_t n,
                                double band_lo, double band_hi);
  /// 201 points on [4, 7] GHz, band [5, 6] GHz.
  static FrequencySweep default_sweep();

  std::size_t size() const noexcept { return points_.size(); }
  std::span<const double> points() const noexcept { return points_; }
  double band_lo() const noexcept { return band_lo_; }
  double band_hi() const noexcept { return band_hi_; }
  bool in_band(std::size_t j) const {
    return points_[j] >= band_lo_ && points_[j] <= band_hi_;
  }
  /// Indices of samples inside [band_lo, band_hi].
  const std::vector<std::size_t>& band_indices() const noexcept {
    return band_;
  }

 private:
  std::vector<double> points_;
  double band_lo_;
  double band_hi_;
  std::vector<std::size_t> band_;
};

/// Response in dB aligned with a FrequencySweep.
struct ResponseCurve {
  std::vector<double> r_db;

  std::size_t size() const noexcept { return r_db.size(); }
  bool all_finite() const noexcept;
};

/// Expensive black-box model. Implementations must be deterministic and
/// safe to call from several threads at once.
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  virtual std::size_t dimension() const = 0;
  virtual const FrequencySweep& sweep() const = 0;
  virtual ResponseCurve evaluate(const DesignVector& x) = 0;
};

/// Memo table keyed on the exact bit pattern of the design vector. The size
/// of the table is the run's cost in model evaluations.
class EvalCache {
 public:
  EvalCache() = default;
  EvalCache(const EvalCache&) = delete;
  EvalCache& operator=(const EvalCache&) = delete;

  /// Returns nullptr when x has not been stored.
  const ResponseCurve* find(const DesignVector& x) const;

  /// Stores r under x unless an entry already exists; returns the stored
  /// (canonical) entry.
  const ResponseCurve& insert(const DesignVector& x, ResponseCurve r);

  std::size_t evaluations() const;
  std::size_t hits() const;
  void record_hit() const;

 private:
  struct Key {
    std::vector<std::uint64_t> bits;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  static Key make_key(const DesignVector& x);

  mutable std::mutex mutex_;
  // Node-based map: references to stored curves stay valid across inserts.
  std::unordered_map<Key, ResponseCurve, KeyHash> table_;
  mutable std::size_t hits_ = 0;
};

struct CachedResult {
  const ResponseCurve* response;
  bool hit;
};

DesignVector clip_to_bounds(const DesignVector& x, const Bounds& b);

/// Evaluates x through the cache. The evaluator is only invoked on a miss.
/// Evaluator failures and non-finite or misaligned responses are rethrown as
/// Error{Evaluation} (or the evaluator's own Error kind) naming x.
CachedResult cached_evaluate(EvalCache& cache, Evaluator& ev,
                             const DesignVector& x);

/// Max of r_db over the samples inside the inclusive band [f_L, f_H].
double objective_minmax(const ResponseCurve& r, const FrequencySweep& sweep);

}  // namespace fdtr
