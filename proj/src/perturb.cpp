#include "fdtr/perturb.hpp"

#include <cmath>
#include <future>
#include <sstream>

#include <fmt/format.h>

namespace fdtr {

namespace {

double parse_double(const std::string& s, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw Error(ErrorKind::Config,
                fmt::format("cannot parse number '{}' in {}", s, context));
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

PerturbationScheme parse_scheme(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorKind::Config,
                fmt::format("scheme '{}' must look like kind:value", text));
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  PerturbationScheme scheme;
  if (kind == "fraction") {
    scheme = FractionOfInitial{parse_double(rest, text)};
  } else if (kind == "sqrteps") {
    scheme = SqrtMachineEps{parse_double(rest, text)};
  } else if (kind == "custom") {
    CustomFractions c;
    for (const auto& item : split(rest, ','))
      c.fracs.push_back(parse_double(item, text));
    if (c.fracs.empty())
      throw Error(ErrorKind::Config, "custom scheme needs at least one fraction");
    scheme = std::move(c);
  } else {
    throw Error(ErrorKind::Config, fmt::format("unknown scheme kind '{}'", kind));
  }
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        bool ok = true;
        if constexpr (std::is_same_v<T, FractionOfInitial>) ok = s.frac > 0;
        if constexpr (std::is_same_v<T, SqrtMachineEps>) ok = s.machine_eps > 0;
        if constexpr (std::is_same_v<T, CustomFractions>)
          for (double f : s.fracs) ok = ok && f > 0;
        if (!ok)
          throw Error(ErrorKind::Config,
                      fmt::format("scheme '{}' needs positive values", text));
      },
      scheme);
  return scheme;
}

std::string scheme_spec(const PerturbationScheme& scheme) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FractionOfInitial>)
          return fmt::format("fraction:{}", s.frac);
        else if constexpr (std::is_same_v<T, SqrtMachineEps>)
          return fmt::format("sqrteps:{}", s.machine_eps);
        else
          return fmt::format("custom:{}", fmt::join(s.fracs, ","));
      },
      scheme);
}

std::string scheme_label(const PerturbationScheme& scheme) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FractionOfInitial>)
          return fmt::format("{:.6g}pct", s.frac * 100.0);
        else if constexpr (std::is_same_v<T, SqrtMachineEps>)
          return "sqrteps";
        else
          return "custom";
      },
      scheme);
}

StepVector::StepVector(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw Error(ErrorKind::Dimension, "step vector is empty");
  for (double v : p_)
    if (!(v > 0) || !std::isfinite(v))
      throw Error(ErrorKind::Config,
                  "finite-difference steps must be positive and finite: " +
                      format_vector(p_));
}

StepVector resolve_steps(const PerturbationScheme& scheme,
                         const DesignVector& x0) {
  const std::size_t dim = x0.size();
  for (std::size_t d = 0; d < dim; ++d)
    if (!(x0[d] > 0))
      throw Error(ErrorKind::Config,
                  fmt::format("relative perturbation undefined: x0[{}] = {} "
                              "is not positive",
                              d, x0[d]));

  std::vector<double> fracs = std::visit(
      [dim](const auto& s) -> std::vector<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FractionOfInitial>) {
          return std::vector<double>(dim, s.frac);
        } else if constexpr (std::is_same_v<T, SqrtMachineEps>) {
          return std::vector<double>(dim, std::sqrt(s.machine_eps));
        } else {
          if (s.fracs.size() != dim)
            throw Error(ErrorKind::Dimension,
                        fmt::format("custom scheme has {} fractions for a "
                                    "{}-dimensional design",
                                    s.fracs.size(), dim));
          return s.fracs;
        }
      },
      scheme);

  std::vector<double> p(dim);
  for (std::size_t d = 0; d < dim; ++d) p[d] = fracs[d] * x0[d];
  return StepVector(std::move(p));
}

JacobianResult fd_jacobian(EvalCache& cache, Evaluator& ev,
                           const DesignVector& x, const StepVector& p,
                           const Bounds& b, const JacobianOptions& opts) {
  const std::size_t dim = x.size();
  if (p.size() != dim || b.size() != dim || ev.dimension() != dim)
    throw Error(ErrorKind::Dimension,
                fmt::format("fd_jacobian: design {}, steps {}, bounds {}, "
                            "evaluator {}",
                            dim, p.size(), b.size(), ev.dimension()));
  if (!b.contains(x))
    throw Error(ErrorKind::Config, "fd_jacobian: center outside bounds " +
                                       format_vector(x.values()));

  std::vector<double> signed_steps(dim);
  std::vector<DesignVector> probe_points;
  probe_points.reserve(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    double s = p[d];
    if (x[d] + s > b.upper(d)) s = -p[d];
    if (x[d] + s < b.lower(d))
      throw Error(ErrorKind::Config,
                  fmt::format("step {} in dimension {} does not fit inside "
                              "bounds [{}, {}] in either direction",
                              p[d], d, b.lower(d), b.upper(d)));
    signed_steps[d] = s;
    probe_points.push_back(x.with(d, x[d] + s));
  }

  const CachedResult center = cached_evaluate(cache, ev, x);
  const ResponseCurve& r0 = *center.response;

  std::vector<CachedResult> probes(dim);
  if (opts.parallel_probes && dim > 1) {
    std::vector<std::future<CachedResult>> futures;
    futures.reserve(dim);
    for (std::size_t d = 0; d < dim; ++d)
      futures.push_back(std::async(std::launch::async, [&, d] {
        return cached_evaluate(cache, ev, probe_points[d]);
      }));
    // Collect all before rethrowing so no task outlives this frame.
    std::exception_ptr first_error;
    for (std::size_t d = 0; d < dim; ++d) {
      try {
        probes[d] = futures[d].get();
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
  } else {
    for (std::size_t d = 0; d < dim; ++d)
      probes[d] = cached_evaluate(cache, ev, probe_points[d]);
  }

  const std::size_t m = r0.size();
  Matrix jac(m, dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const ResponseCurve& rd = *probes[d].response;
    for (std::size_t j = 0; j < m; ++j)
      jac(j, d) = (rd.r_db[j] - r0.r_db[j]) / signed_steps[d];
  }

  JacobianResult out{LinearModel{x, r0, std::move(jac)},
                     ProbeRecord{x, center.hit},
                     {},
                     std::move(signed_steps)};
  out.probes.reserve(dim);
  for (std::size_t d = 0; d < dim; ++d)
    out.probes.push_back(ProbeRecord{probe_points[d], probes[d].hit});
  return out;
}

std::vector<FdErrorRow> fd_error_curve(const std::function<double(double)>& f,
                                       const std::function<double(double)>& df,
                                       double t, std::span<const double> steps) {
  std::vector<FdErrorRow> rows;
  rows.reserve(steps.size());
  const double f0 = f(t);
  const double exact = df(t);
  for (double h : steps) {
    if (!(h > 0))
      throw Error(ErrorKind::Config,
                  fmt::format("fd_error_curve: step {} is not positive", h));
    const double f1 = f(t + h);
    const double residual = (f1 - f0) / h - exact;
    const bool valid = std::isfinite(f0) && std::isfinite(f1) &&
                       std::isfinite(exact) && std::isfinite(residual);
    rows.push_back({h, residual, std::abs(residual), valid});
  }
  return rows;
}

std::vector<double> parse_steps(const std::string& text) {
  std::vector<double> steps;
  if (text.rfind("log:", 0) == 0) {
    const auto parts = split(text.substr(4), ':');
    if (parts.size() != 3)
      throw Error(ErrorKind::Config,
                  fmt::format("steps '{}' must be log:LO:HI:N", text));
    const double lo = parse_double(parts[0], text);
    const double hi = parse_double(parts[1], text);
    const double n_real = parse_double(parts[2], text);
    if (!(lo > 0) || !(hi > lo) || n_real < 2 || n_real != std::floor(n_real))
      throw Error(ErrorKind::Config,
                  fmt::format("steps '{}' need 0 < LO < HI and integer N >= 2",
                              text));
    const auto n = static_cast<std::size_t>(n_real);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i)
      steps.push_back(
          std::pow(10.0, a + (b - a) * static_cast<double>(i) /
                                 static_cast<double>(n - 1)));
  } else {
    for (const auto& item : split(text, ','))
      steps.push_back(parse_double(item, text));
  }
  if (steps.empty()) throw Error(ErrorKind::Config, "no steps given");
  return steps;
}

}  // namespace fdtr
