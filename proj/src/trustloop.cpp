#include "fdtr/trustloop.hpp"

#include <cmath>

#include <fmt/format.h>

namespace fdtr {

void TrustConfig::validate() const {
  if (!(alpha1 > 0 && alpha1 < 1 && alpha2 > 1))
    throw Error(ErrorKind::Config, "trust config needs 0 < alpha1 < 1 < alpha2");
  if (!(rho_low > 0 && rho_low < rho_high && rho_high < 1))
    throw Error(ErrorKind::Config,
                "trust config needs 0 < rho_low < rho_high < 1");
  if (!(delta0 > 0) || !(term_eps > 0))
    throw Error(ErrorKind::Config, "trust config needs delta0, term_eps > 0");
}

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::None: return "none";
    case Termination::Radius: return "radius";
    case Termination::Step: return "step";
    case Termination::Budget: return "budget";
    case Termination::EvaluatorFailure: return "evaluator_failure";
  }
  return "unknown";
}

double gain_ratio(double u_new, double u_old, double g_new, double g_old) {
  const double predicted = g_new - g_old;
  if (std::abs(predicted) < 1e-12) return 0.0;
  return (u_new - u_old) / predicted;
}

bool accept_or_reject(double rho) { return rho > 0.0; }

double update_radius(double rho, double step_norm, double delta,
                     const TrustConfig& cfg) {
  if (rho < cfg.rho_low) {
    const double shrunk = cfg.alpha1 * step_norm;
    // A zero-length step would pin the radius at zero; shrink delta instead.
    return shrunk > 0.0 ? shrunk : cfg.alpha1 * delta;
  }
  if (rho > cfg.rho_high) return std::max(cfg.alpha2 * step_norm, delta);
  return delta;
}

TerminationCheck should_terminate(const TrustState& state,
                                  const TrustConfig& cfg) {
  if (state.delta < cfg.term_eps) return {true, Termination::Radius};
  if (state.last_accepted_step && *state.last_accepted_step < cfg.term_eps)
    return {true, Termination::Step};
  if (state.evaluations >= cfg.budget(state.x.size()))
    return {true, Termination::Budget};
  return {false, Termination::None};
}

namespace {

void log_jacobian(RunResult& out, const JacobianResult& jr) {
  out.eval_log.push_back({EvalRecord::Kind::Center, jr.center.x, jr.center.hit});
  for (const auto& p : jr.probes)
    out.eval_log.push_back({EvalRecord::Kind::Probe, p.x, p.hit});
  ++out.jacobian_builds;
}

}  // namespace

RunResult optimize(Evaluator& ev, const DesignVector& x0, const Bounds& b,
                   const TrustConfig& cfg) {
  cfg.validate();
  if (x0.size() != b.size() || ev.dimension() != x0.size())
    throw Error(ErrorKind::Dimension,
                fmt::format("optimize: x0 has {} entries, bounds {}, evaluator {}",
                            x0.size(), b.size(), ev.dimension()));
  if (!b.contains(x0))
    throw Error(ErrorKind::Config,
                "optimize: initial design outside bounds " + format_vector(x0.values()));
  const StepVector steps = resolve_steps(cfg.scheme, x0);
  const FrequencySweep& sweep = ev.sweep();
  const JacobianOptions jopts{cfg.parallel_probes};

  EvalCache cache;
  RunResult out;
  out.initial = x0;
  out.best = x0;

  TrustState state;
  state.x = x0;
  state.delta = cfg.delta0;

  try {
    const CachedResult c0 = cached_evaluate(cache, ev, x0);
    out.eval_log.push_back({EvalRecord::Kind::Center, x0, c0.hit});
    state.response = *c0.response;
    state.objective = objective_minmax(state.response, sweep);
    out.initial_objective = state.objective;
    out.best_objective = state.objective;
    out.best_response = state.response;

    JacobianResult jr = fd_jacobian(cache, ev, state.x, steps, b, jopts);
    log_jacobian(out, jr);
    LinearModel model = std::move(jr.model);
    state.evaluations = cache.evaluations();

    while (true) {
      if (const auto chk = should_terminate(state, cfg); chk.stop) {
        out.termination = chk.reason;
        break;
      }
      ++state.iteration;

      const SubproblemSpec spec{model, b, state.delta, cfg.norm, sweep};
      const DesignVector candidate = solve_tr_subproblem(spec);
      const double g_old = objective_minmax(model.center_response, sweep);
      const double g_new = model_objective(model, candidate, sweep);
      const double step = step_norm(candidate, state.x, b, cfg.norm);

      const CachedResult rc = cached_evaluate(cache, ev, candidate);
      out.eval_log.push_back({EvalRecord::Kind::Candidate, candidate, rc.hit});
      const double u_new = objective_minmax(*rc.response, sweep);

      const double rho = gain_ratio(u_new, state.objective, g_new, g_old);
      const bool accepted = accept_or_reject(rho);
      const double used_delta = state.delta;
      state.delta = update_radius(rho, step, state.delta, cfg);
      state.last_rho = rho;
      state.evaluations = cache.evaluations();

      out.trace.push_back({state.iteration, accepted, rho, used_delta, step, u_new,
                           state.evaluations, candidate});

      if (accepted) {
        state.x = candidate;
        state.response = *rc.response;
        state.objective = u_new;
        state.last_accepted_step = step;
        out.best = state.x;
        out.best_objective = state.objective;
        out.best_response = state.response;
      }

      if (const auto chk = should_terminate(state, cfg); chk.stop) {
        out.termination = chk.reason;
        break;
      }
      if (accepted) {
        jr = fd_jacobian(cache, ev, state.x, steps, b, jopts);
        log_jacobian(out, jr);
        model = std::move(jr.model);
        state.evaluations = cache.evaluations();
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Dimension) throw;
    out.termination = Termination::EvaluatorFailure;
    out.error_kind = e.kind();
    out.error = e.what();
  }

  out.evaluations = cache.evaluations();
  return out;
}

}  // namespace fdtr
