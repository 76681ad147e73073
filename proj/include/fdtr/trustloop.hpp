#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fdtr/core.hpp"
#include "fdtr/model.hpp"
#include "fdtr/perturb.hpp"
#include "fdtr/surrogate.hpp"

namespace fdtr {

struct TrustConfig {
  double alpha1 = 0.25;   // shrink factor
  double alpha2 = 2.5;    // growth factor
  double rho_low = 0.05;  // below: shrink
  double rho_high = 0.9;  // above: grow
  double delta0 = 1.0;    // initial radius
  double term_eps = 1e-2; // radius / step termination tolerance
  std::size_t max_evals = 0;  // 0 selects 200 * (D + 1)
  NormKind norm = NormKind::Euclidean;
  PerturbationScheme scheme = FractionOfInitial{0.01};
  bool parallel_probes = false;

  void validate() const;
  std::size_t budget(std::size_t dim) const {
    return max_evals != 0 ? max_evals : 200 * (dim + 1);
  }
};

enum class Termination {
  None,
  Radius,            // delta fell below term_eps
  Step,              // last accepted step shorter than term_eps
  Budget,            // evaluation budget exhausted
  EvaluatorFailure,  // run aborted, trace is partial
};

const char* to_string(Termination t) noexcept;

struct TrustState {
  std::size_t iteration = 0;
  DesignVector x;
  ResponseCurve response;
  double objective = 0;
  double delta = 0;
  std::optional<double> last_accepted_step;
  std::optional<double> last_rho;
  std::size_t evaluations = 0;
};

/// One candidate trial.
struct TraceRow {
  std::size_t iter;  // 1-based trial index
  bool accepted;
  double rho;
  double delta;      // radius the candidate was generated with
  double step_norm;
  double objective_db;  // U at the candidate
  std::size_t cum_evals;
  DesignVector candidate;
};

/// Every design submitted to the cache, in submission order.
struct EvalRecord {
  enum class Kind { Center, Probe, Candidate };
  Kind kind;
  DesignVector x;
  bool hit;
};

struct RunResult {
  DesignVector initial;
  double initial_objective = 0;
  DesignVector best;
  double best_objective = 0;
  ResponseCurve best_response;
  std::size_t evaluations = 0;
  std::size_t jacobian_builds = 0;
  std::vector<TraceRow> trace;
  std::vector<EvalRecord> eval_log;
  Termination termination = Termination::None;
  std::optional<ErrorKind> error_kind;
  std::string error;

  bool failed() const noexcept { return termination == Termination::EvaluatorFailure; }
};

/// (u_new - u_old) / (g_new - g_old); 0 when the predicted change is below
/// 1e-12 in magnitude.
double gain_ratio(double u_new, double u_old, double g_new, double g_old);

/// Accept iff rho > 0.
bool accept_or_reject(double rho);

double update_radius(double rho, double step_norm, double delta,
                     const TrustConfig& cfg);

struct TerminationCheck {
  bool stop;
  Termination reason;
};

TerminationCheck should_terminate(const TrustState& state, const TrustConfig& cfg);

/// Runs the trust-region loop from x0. Throws Error before any evaluation
/// when x0 or cfg is invalid; evaluator failures end the run with
/// Termination::EvaluatorFailure and a partial trace.
RunResult optimize(Evaluator& ev, const DesignVector& x0, const Bounds& b,
                   const TrustConfig& cfg);

}  // namespace fdtr
