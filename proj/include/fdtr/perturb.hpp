#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "fdtr/core.hpp"
#include "fdtr/model.hpp"

namespace fdtr {

/// p = frac * x0
struct FractionOfInitial {
  double frac;
};
/// p = sqrt(machine_eps) * x0
struct SqrtMachineEps {
  double machine_eps;
};
/// p[d] = fracs[d] * x0[d]
struct CustomFractions {
  std::vector<double> fracs;
};

using PerturbationScheme =
    std::variant<FractionOfInitial, SqrtMachineEps, CustomFractions>;

/// Parses "fraction:F", "sqrteps:E" or "custom:f1,...,fD".
PerturbationScheme parse_scheme(const std::string& text);
/// Inverse of parse_scheme (shortest round-tripping numbers).
std::string scheme_spec(const PerturbationScheme& scheme);
/// Short label used in file and column names, e.g. "1pct", "0.5pct",
/// "sqrteps", "custom".
std::string scheme_label(const PerturbationScheme& scheme);

/// Absolute finite-difference steps, all strictly positive.
class StepVector {
 public:
  explicit StepVector(std::vector<double> p);

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t d) const { return p_[d]; }
  std::span<const double> values() const noexcept { return p_; }

 private:
  std::vector<double> p_;
};

/// Turns a relative scheme into absolute steps using the initial design.
/// The steps are meant to stay fixed for the whole run.
StepVector resolve_steps(const PerturbationScheme& scheme,
                         const DesignVector& x0);

struct JacobianOptions {
  bool parallel_probes = false;
};

/// Per-request record of what fd_jacobian asked the cache for.
struct ProbeRecord {
  DesignVector x;
  bool hit;
};

struct JacobianResult {
  LinearModel model;
  ProbeRecord center;
  std::vector<ProbeRecord> probes;  // index d = dimension d
  std::vector<double> signed_steps; // +p[d] forward, -p[d] when flipped
};

/// Forward-difference Jacobian. A probe that would leave the box through the
/// upper bound is flipped to a backward step of the same size.
JacobianResult fd_jacobian(EvalCache& cache, Evaluator& ev,
                           const DesignVector& x, const StepVector& p,
                           const Bounds& b, const JacobianOptions& opts = {});

struct FdErrorRow {
  double step;
  double residual;
  double abs_residual;
  bool valid;
};

/// Residual of the forward-difference derivative against df at t for each
/// step, in input order. Non-finite values mark the row invalid.
std::vector<FdErrorRow> fd_error_curve(const std::function<double(double)>& f,
                                       const std::function<double(double)>& df,
                                       double t, std::span<const double> steps);

/// Parses "log:LO:HI:N" (N log-spaced steps) or a comma list.
std::vector<double> parse_steps(const std::string& text);

}  // namespace fdtr
