#include "fdtr/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace fdtr {

namespace {

std::vector<double> norm_weights(const Bounds& b, NormKind norm) {
  std::vector<double> w(b.size(), 1.0);
  if (norm == NormKind::EuclideanUnitBox)
    for (std::size_t d = 0; d < b.size(); ++d) w[d] = 1.0 / b.range(d);
  return w;
}

void validate(const SubproblemSpec& spec) {
  const std::size_t dim = spec.model.dimension();
  if (spec.model.center.size() != dim || spec.bounds.size() != dim)
    throw Error(ErrorKind::Dimension, "subproblem: model and bounds disagree");
  if (spec.model.samples() != spec.sweep.size() ||
      spec.model.center_response.size() != spec.sweep.size())
    throw Error(ErrorKind::Dimension, "subproblem: model and sweep disagree");
  if (!(spec.radius > 0) || !std::isfinite(spec.radius))
    throw Error(ErrorKind::Config, "subproblem: radius must be positive");
  if (!spec.bounds.contains(spec.model.center))
    throw Error(ErrorKind::Config, "subproblem: center outside bounds");
}

// Solves A x = b in place (Gaussian elimination, partial pivoting).
bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a[r * n + k]) > std::abs(a[piv * n + k])) piv = r;
    if (!(std::abs(a[piv * n + k]) > 0)) return false;
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
      std::swap(b[k], b[piv]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a[r * n + k] / a[k * n + k];
      if (f == 0.0) continue;
      for (std::size_t c = k; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
      b[r] -= f * b[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= a[k * n + c] * b[c];
    b[k] = s / a[k * n + k];
  }
  return std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); });
}

// minimise  c.v + 0.5 * sum_d q[d] v[d]^2
// s.t.      rows[i].v < rhs[i],  sum_{d < ball_dims} v[d]^2 < radius^2
// by a primal log-barrier method started from a strictly feasible v.
struct BarrierProblem {
  std::size_t n = 0;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  std::vector<double> c;
  std::vector<double> q;
  std::size_t ball_dims = 0;
  double radius = 0;

  bool strictly_feasible(const std::vector<double>& v) const {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (!(rhs[i] - dot(rows[i], v) > 0)) return false;
    return radius * radius - ball_sq(v) > 0;
  }

  double objective(const std::vector<double>& v) const {
    double f = 0;
    for (std::size_t k = 0; k < n; ++k) f += c[k] * v[k] + 0.5 * q[k] * v[k] * v[k];
    return f;
  }

  // tau * objective + barrier; +inf outside the domain.
  double phi(const std::vector<double>& v, double tau) const {
    double val = tau * objective(v);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double s = rhs[i] - dot(rows[i], v);
      if (!(s > 0)) return std::numeric_limits<double>::infinity();
      val -= std::log(s);
    }
    const double slack = radius * radius - ball_sq(v);
    if (!(slack > 0)) return std::numeric_limits<double>::infinity();
    return val - std::log(slack);
  }

  std::size_t constraint_count() const { return rows.size() + 1; }

  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
  }
  double ball_sq(const std::vector<double>& v) const {
    double s = 0;
    for (std::size_t d = 0; d < ball_dims; ++d) s += v[d] * v[d];
    return s;
  }

  // Newton centering at fixed tau; stops early when no step makes progress.
  void center(std::vector<double>& v, double tau) const {
    std::vector<double> grad(n), hess(n * n), step(n), trial(n);
    for (int it = 0; it < 100; ++it) {
      std::fill(hess.begin(), hess.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        grad[k] = tau * (c[k] + q[k] * v[k]);
        hess[k * n + k] = tau * q[k];
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i];
        const double s = rhs[i] - dot(a, v);
        const double inv = 1.0 / s;
        const double inv2 = inv * inv;
        for (std::size_t k = 0; k < n; ++k) {
          if (a[k] == 0.0) continue;
          grad[k] += a[k] * inv;
          for (std::size_t l = 0; l < n; ++l) hess[k * n + l] += a[k] * a[l] * inv2;
        }
      }
      const double slack = radius * radius - ball_sq(v);
      for (std::size_t d = 0; d < ball_dims; ++d) {
        grad[d] += 2.0 * v[d] / slack;
        hess[d * n + d] += 2.0 / slack;
        for (std::size_t e = 0; e < ball_dims; ++e)
          hess[d * n + e] += 4.0 * v[d] * v[e] / (slack * slack);
      }

      step = grad;
      std::vector<double> h = hess;
      if (!solve_dense(h, step, n)) return;
      double decrement = 0;
      for (std::size_t k = 0; k < n; ++k) {
        step[k] = -step[k];
        decrement -= grad[k] * step[k];
      }
      if (!(decrement > 1e-14)) return;

      const double phi0 = phi(v, tau);
      double alpha = 1.0;
      bool moved = false;
      while (alpha > 1e-16) {
        for (std::size_t k = 0; k < n; ++k) trial[k] = v[k] + alpha * step[k];
        const double phi1 = phi(trial, tau);
        if (std::isfinite(phi1) && phi1 <= phi0 - 0.25 * alpha * decrement) {
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) return;
      v = trial;
      if (decrement < 1e-11) return;
    }
  }

  void solve(std::vector<double>& v, double gap_tol) const {
    double tau = 1.0;
    const double m = static_cast<double>(constraint_count());
    for (int outer = 0; outer < 200; ++outer) {
      center(v, tau);
      if (m / tau < gap_tol) break;
      tau *= 8.0;
    }
  }
};

// Rows of the model restricted to the band, in the scaled variable
// z = w * (x - center): value_k(z) = offset[k] + slope[k] . z
struct BandRows {
  std::vector<double> offset;
  std::vector<std::vector<double>> slope;

  double max_at(const std::vector<double>& z) const {
    double u = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < offset.size(); ++k)
      u = std::max(u, offset[k] + BarrierProblem::dot(slope[k], z));
    return u;
  }
};

BandRows band_rows(const SubproblemSpec& spec, const std::vector<double>& w) {
  const std::size_t dim = spec.model.dimension();
  BandRows rows;
  for (std::size_t j : spec.sweep.band_indices()) {
    rows.offset.push_back(spec.model.center_response.r_db[j]);
    std::vector<double> g(dim);
    for (std::size_t d = 0; d < dim; ++d) g[d] = spec.model.jacobian(j, d) / w[d];
    rows.slope.push_back(std::move(g));
  }
  return rows;
}

DesignVector to_design(const SubproblemSpec& spec, const std::vector<double>& w,
                       const std::vector<double>& z) {
  const auto& c = spec.model.center;
  std::vector<double> x(z.size());
  for (std::size_t d = 0; d < z.size(); ++d) x[d] = c[d] + z[d] / w[d];
  return clip_to_bounds(DesignVector(std::move(x)), spec.bounds);
}

}  // namespace

double step_norm(const DesignVector& a, const DesignVector& b,
                 const Bounds& bounds, NormKind norm) {
  if (a.size() != b.size() || a.size() != bounds.size())
    throw Error(ErrorKind::Dimension, "step_norm: dimension mismatch");
  const auto w = norm_weights(bounds, norm);
  double s = 0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double v = w[d] * (a[d] - b[d]);
    s += v * v;
  }
  return std::sqrt(s);
}

double model_objective(const LinearModel& model, const DesignVector& x,
                       const FrequencySweep& sweep) {
  return objective_minmax(model_predict(model, x), sweep);
}

DesignVector solve_tr_subproblem(const SubproblemSpec& spec) {
  validate(spec);
  const std::size_t dim = spec.model.dimension();
  const auto w = norm_weights(spec.bounds, spec.norm);
  const auto& c = spec.model.center;
  const BandRows rows = band_rows(spec, w);

  std::vector<double> lo(dim), hi(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    lo[d] = w[d] * (spec.bounds.lower(d) - c[d]);
    hi[d] = w[d] * (spec.bounds.upper(d) - c[d]);
  }

  // Strictly feasible start: origin nudged away from any active bound.
  std::vector<double> z0(dim, 0.0);
  const double nudge_cap = spec.radius / (4.0 * std::sqrt(static_cast<double>(dim)));
  for (std::size_t d = 0; d < dim; ++d) {
    const double nudge = std::min(0.25 * (hi[d] - lo[d]), nudge_cap);
    if (lo[d] >= 0.0) z0[d] = lo[d] + nudge;
    else if (hi[d] <= 0.0) z0[d] = hi[d] - nudge;
  }

  auto add_box = [&](BarrierProblem& p) {
    for (std::size_t d = 0; d < dim; ++d) {
      std::vector<double> up(p.n, 0.0), down(p.n, 0.0);
      up[d] = 1.0;
      down[d] = -1.0;
      p.rows.push_back(std::move(up));
      p.rhs.push_back(hi[d]);
      p.rows.push_back(std::move(down));
      p.rhs.push_back(-lo[d]);
    }
  };

  // Stage 1: min t  s.t. offset_k + slope_k.z <= t.
  BarrierProblem epi;
  epi.n = dim + 1;
  epi.c.assign(epi.n, 0.0);
  epi.c[dim] = 1.0;
  epi.q.assign(epi.n, 0.0);
  epi.ball_dims = dim;
  epi.radius = spec.radius;
  for (std::size_t k = 0; k < rows.offset.size(); ++k) {
    std::vector<double> a(rows.slope[k]);
    a.push_back(-1.0);
    epi.rows.push_back(std::move(a));
    epi.rhs.push_back(-rows.offset[k]);
  }
  add_box(epi);

  std::vector<double> v(z0);
  v.push_back(rows.max_at(z0) + 1.0);
  const double scale = 1.0 + std::abs(rows.max_at(z0));
  if (epi.strictly_feasible(v)) epi.solve(v, 1e-10 * scale);
  std::vector<double> z1(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(dim));
  const double best = rows.max_at(z1);

  // Stage 2: smallest displacement with objective no worse than best + tol.
  BarrierProblem near;
  near.n = dim;
  near.c.assign(dim, 0.0);
  near.q.assign(dim, 2.0);
  near.ball_dims = dim;
  near.radius = spec.radius;
  const double level = best + 1e-9 * (1.0 + std::abs(best));
  for (std::size_t k = 0; k < rows.offset.size(); ++k) {
    near.rows.push_back(rows.slope[k]);
    near.rhs.push_back(level - rows.offset[k]);
  }
  add_box(near);
  std::vector<double> z2 = z1;
  if (near.strictly_feasible(z2)) near.solve(z2, 1e-12 * (1.0 + spec.radius * spec.radius));

  DesignVector candidate = to_design(spec, w, z2);
  // Guard the ball against round-off in the back-transform.
  const double dist = step_norm(candidate, c, spec.bounds, spec.norm);
  if (dist > spec.radius) {
    std::vector<double> x(dim);
    const double shrink = spec.radius / dist;
    for (std::size_t d = 0; d < dim; ++d) x[d] = c[d] + (candidate[d] - c[d]) * shrink;
    candidate = clip_to_bounds(DesignVector(std::move(x)), spec.bounds);
  }

  const double u_center = objective_minmax(spec.model.center_response, spec.sweep);
  if (!(model_objective(spec.model, candidate, spec.sweep) < u_center)) return c;
  return candidate;
}

DesignVector subproblem_oracle_grid(const SubproblemSpec& spec,
                                    std::size_t resolution) {
  validate(spec);
  const std::size_t dim = spec.model.dimension();
  if (dim > 3)
    throw Error(ErrorKind::Config,
                fmt::format("grid oracle refuses D = {} (limit 3)", dim));
  if (resolution < 11)
    throw Error(ErrorKind::Config, "grid oracle needs resolution >= 11");

  const auto w = norm_weights(spec.bounds, spec.norm);
  const auto& c = spec.model.center;
  const BandRows rows = band_rows(spec, w);

  std::vector<std::vector<double>> axis(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double a = std::max(spec.bounds.lower(d), c[d] - spec.radius / w[d]);
    const double b = std::min(spec.bounds.upper(d), c[d] + spec.radius / w[d]);
    axis[d].resize(resolution);
    for (std::size_t i = 0; i < resolution; ++i)
      axis[d][i] = a + (b - a) * static_cast<double>(i) /
                           static_cast<double>(resolution - 1);
    axis[d].back() = b;
  }

  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> z(dim);
  std::vector<double> best_x;
  double best_u = std::numeric_limits<double>::infinity();
  const double r2 = spec.radius * spec.radius;
  while (true) {
    double dist2 = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      z[d] = w[d] * (axis[d][idx[d]] - c[d]);
      dist2 += z[d] * z[d];
    }
    if (dist2 <= r2) {
      const double u = rows.max_at(z);
      if (u < best_u) {
        best_u = u;
        best_x.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) best_x[d] = axis[d][idx[d]];
      }
    }
    // Last dimension varies fastest: lexicographic order on the index.
    std::size_t d = dim;
    while (d > 0) {
      --d;
      if (++idx[d] < resolution) break;
      idx[d] = 0;
      if (d == 0) {
        if (best_x.empty()) return c;
        return DesignVector(std::move(best_x));
      }
    }
  }
}

}  // namespace fdtr
