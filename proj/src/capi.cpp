#include "fdtr/fdtr.h"

#include <cmath>
#include <cstring>
#include <iostream>
#include <functional>

#include <fmt/format.h>

#include "fdtr/adapter.hpp"
#include "fdtr/bench.hpp"
#include "fdtr/perturb.hpp"
#include "fdtr/problems.hpp"
#include "fdtr/trustloop.hpp"

struct fdtr_problem {
  fdtr::ProblemSelector selector;
  fdtr::Problem problem;
};

struct fdtr_run {
  fdtr::RunResult result;
};

struct fdtr_sweep {
  fdtr::SweepTable table;
  fdtr::FrequencySweep frequencies;
};

namespace {

thread_local std::string last_error;

fdtr_status status_of(fdtr::ErrorKind kind) {
  using fdtr::ErrorKind;
  switch (kind) {
    case ErrorKind::Config: return FDTR_ERR_CONFIG;
    case ErrorKind::Dimension: return FDTR_ERR_DIMENSION;
    case ErrorKind::Evaluation: return FDTR_ERR_EVALUATION;
    case ErrorKind::Protocol: return FDTR_ERR_PROTOCOL;
    case ErrorKind::RemoteError: return FDTR_ERR_REMOTE;
    case ErrorKind::Timeout: return FDTR_ERR_TIMEOUT;
    case ErrorKind::ProcessExited: return FDTR_ERR_PROCESS_EXITED;
    case ErrorKind::Io: return FDTR_ERR_IO;
  }
  return FDTR_ERR_INTERNAL;
}

fdtr_status fail(fdtr_status s, std::string message) {
  last_error = std::move(message);
  return s;
}

template <class F>
fdtr_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const fdtr::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FDTR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FDTR_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fdtr::ProblemSelector selector_from(const fdtr_problem_options& o) {
  fdtr::ProblemSelector sel;
  sel.name = o.name ? o.name : "antenna";
  sel.noise.amplitude_db = o.noise_amplitude_db;
  sel.noise.cell_fraction = o.noise_cell_fraction;
  sel.noise.seed = o.noise_seed;
  sel.noise.validate();
  if (o.bounds_dim > 0) {
    if (!o.lower || !o.upper)
      throw fdtr::Error(fdtr::ErrorKind::Config, "bounds_dim set without lower/upper");
    sel.bounds = fdtr::Bounds(std::vector<double>(o.lower, o.lower + o.bounds_dim),
                              std::vector<double>(o.upper, o.upper + o.bounds_dim));
  }
  sel.sweep_lo = o.sweep_lo_ghz;
  sel.sweep_hi = o.sweep_hi_ghz;
  sel.sweep_points = o.sweep_points;
  sel.band_lo = o.band_lo_ghz;
  sel.band_hi = o.band_hi_ghz;
  if (!(o.timeout_s > 0))
    throw fdtr::Error(fdtr::ErrorKind::Config, "timeout must be positive");
  sel.timeout = std::chrono::milliseconds(static_cast<long long>(std::ceil(o.timeout_s * 1000.0)));
  return sel;
}

}  // namespace

extern "C" {

const char* fdtr_version(void) { return "0.1.0"; }

const char* fdtr_status_name(fdtr_status status) {
  switch (status) {
    case FDTR_OK: return "ok";
    case FDTR_ERR_USAGE: return "usage";
    case FDTR_ERR_CONFIG: return "config";
    case FDTR_ERR_DIMENSION: return "dimension";
    case FDTR_ERR_EVALUATION: return "evaluation";
    case FDTR_ERR_PROTOCOL: return "protocol";
    case FDTR_ERR_REMOTE: return "remote_error";
    case FDTR_ERR_TIMEOUT: return "timeout";
    case FDTR_ERR_PROCESS_EXITED: return "process_exited";
    case FDTR_ERR_IO: return "io";
    case FDTR_ERR_BUFFER: return "buffer";
    case FDTR_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* fdtr_last_error(void) { return last_error.c_str(); }

void fdtr_string_free(char* s) { std::free(s); }

void fdtr_problem_options_default(fdtr_problem_options* opts) {
  if (!opts) return;
  const fdtr::NoiseSpec noise;
  const fdtr::ProblemSelector sel;
  *opts = fdtr_problem_options{};
  opts->name = "antenna";
  opts->noise_amplitude_db = noise.amplitude_db;
  opts->noise_cell_fraction = noise.cell_fraction;
  opts->noise_seed = noise.seed;
  opts->sweep_lo_ghz = sel.sweep_lo;
  opts->sweep_hi_ghz = sel.sweep_hi;
  opts->sweep_points = sel.sweep_points;
  opts->band_lo_ghz = sel.band_lo;
  opts->band_hi_ghz = sel.band_hi;
  opts->timeout_s = 600.0;
}

fdtr_status fdtr_problem_create(const fdtr_problem_options* opts, fdtr_problem** out) {
  if (!opts || !out) return fail(FDTR_ERR_USAGE, "fdtr_problem_create: null argument");
  *out = nullptr;
  return guarded([&] {
    fdtr::ProblemSelector sel = selector_from(*opts);
    std::size_t dim = opts->dimension;
    if (dim == 0) dim = opts->bounds_dim ? opts->bounds_dim : 6;
    fdtr::Problem p = sel.instantiate(dim);
    *out = new fdtr_problem{std::move(sel), std::move(p)};
    return FDTR_OK;
  });
}

void fdtr_problem_destroy(fdtr_problem* problem) { delete problem; }

size_t fdtr_problem_dimension(const fdtr_problem* problem) {
  return problem ? problem->problem.evaluator->dimension() : 0;
}

size_t fdtr_problem_samples(const fdtr_problem* problem) {
  return problem ? problem->problem.evaluator->sweep().size() : 0;
}

fdtr_status fdtr_problem_evaluate(fdtr_problem* problem, const double* x, size_t dim,
                                  double* r_db, size_t cap) {
  if (!problem || !x || !r_db) return fail(FDTR_ERR_USAGE, "fdtr_problem_evaluate: null argument");
  return guarded([&] {
    auto& ev = *problem->problem.evaluator;
    if (cap < ev.sweep().size())
      return fail(FDTR_ERR_BUFFER, fmt::format("need room for {} samples", ev.sweep().size()));
    const fdtr::ResponseCurve r = ev.evaluate(fdtr::DesignVector(std::vector<double>(x, x + dim)));
    std::copy(r.r_db.begin(), r.r_db.end(), r_db);
    return FDTR_OK;
  });
}

fdtr_status fdtr_design_parse(const char* text, double* x, size_t cap, size_t* dim) {
  if (!text || !dim) return fail(FDTR_ERR_USAGE, "fdtr_design_parse: null argument");
  return guarded([&] {
    const auto [label, design] = fdtr::parse_design(text);
    *dim = design.size();
    if (!x || cap < design.size())
      return fail(FDTR_ERR_BUFFER, fmt::format("design has {} entries", design.size()));
    std::copy(design.values().begin(), design.values().end(), x);
    return FDTR_OK;
  });
}

void fdtr_trust_options_default(fdtr_trust_options* opts) {
  if (!opts) return;
  const fdtr::TrustConfig c;
  *opts = fdtr_trust_options{};
  opts->alpha1 = c.alpha1;
  opts->alpha2 = c.alpha2;
  opts->rho_low = c.rho_low;
  opts->rho_high = c.rho_high;
  opts->delta0 = c.delta0;
  opts->term_eps = c.term_eps;
  opts->max_evals = c.max_evals;
  opts->normalize_box = 0;
  opts->parallel_probes = 0;
  opts->scheme = "fraction:0.01";
}

fdtr_status fdtr_optimize(fdtr_problem* problem, const double* x0, size_t dim,
                          const fdtr_trust_options* opts, fdtr_run** out) {
  if (!problem || !x0 || !opts || !out) return fail(FDTR_ERR_USAGE, "fdtr_optimize: null argument");
  *out = nullptr;
  return guarded([&] {
    fdtr::TrustConfig cfg;
    cfg.alpha1 = opts->alpha1;
    cfg.alpha2 = opts->alpha2;
    cfg.rho_low = opts->rho_low;
    cfg.rho_high = opts->rho_high;
    cfg.delta0 = opts->delta0;
    cfg.term_eps = opts->term_eps;
    cfg.max_evals = static_cast<std::size_t>(opts->max_evals);
    cfg.norm = opts->normalize_box ? fdtr::NormKind::EuclideanUnitBox : fdtr::NormKind::Euclidean;
    cfg.parallel_probes = opts->parallel_probes != 0;
    cfg.scheme = fdtr::parse_scheme(opts->scheme ? opts->scheme : "fraction:0.01");

    const fdtr::DesignVector start(std::vector<double>(x0, x0 + dim));
    auto run = std::make_unique<fdtr_run>();
    run->result = fdtr::optimize(*problem->problem.evaluator, start, problem->problem.bounds, cfg);
    const bool failed = run->result.failed();
    const fdtr::ErrorKind kind = run->result.error_kind.value_or(fdtr::ErrorKind::Evaluation);
    const std::string message = run->result.error;
    *out = run.release();
    if (failed) return fail(status_of(kind), message);
    return FDTR_OK;
  });
}

void fdtr_run_destroy(fdtr_run* run) { delete run; }

double fdtr_run_initial_objective(const fdtr_run* run) {
  return run ? run->result.initial_objective : std::nan("");
}
double fdtr_run_best_objective(const fdtr_run* run) {
  return run ? run->result.best_objective : std::nan("");
}
size_t fdtr_run_evaluations(const fdtr_run* run) { return run ? run->result.evaluations : 0; }
size_t fdtr_run_jacobian_builds(const fdtr_run* run) {
  return run ? run->result.jacobian_builds : 0;
}
size_t fdtr_run_trials(const fdtr_run* run) { return run ? run->result.trace.size() : 0; }
const char* fdtr_run_termination(const fdtr_run* run) {
  return run ? fdtr::to_string(run->result.termination) : "";
}
const char* fdtr_run_error(const fdtr_run* run) { return run ? run->result.error.c_str() : ""; }

size_t fdtr_run_best_design(const fdtr_run* run, double* x, size_t cap) {
  if (!run) return 0;
  const auto v = run->result.best.values();
  if (x && cap >= v.size()) std::copy(v.begin(), v.end(), x);
  return v.size();
}

fdtr_status fdtr_run_trace_row(const fdtr_run* run, size_t index, fdtr_trace_row* row) {
  if (!run || !row) return fail(FDTR_ERR_USAGE, "fdtr_run_trace_row: null argument");
  if (index >= run->result.trace.size())
    return fail(FDTR_ERR_USAGE, fmt::format("trace has {} rows", run->result.trace.size()));
  const auto& r = run->result.trace[index];
  *row = fdtr_trace_row{r.iter, r.accepted ? 1 : 0, r.rho, r.delta, r.step_norm, r.objective_db,
                        r.cum_evals};
  return FDTR_OK;
}

fdtr_status fdtr_run_write(const fdtr_run* run, const fdtr_problem* problem, const char* dir,
                           const char* label) {
  if (!run || !problem || !dir) return fail(FDTR_ERR_USAGE, "fdtr_run_write: null argument");
  return guarded([&] {
    const std::filesystem::path out(dir);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) return fail(FDTR_ERR_IO, fmt::format("cannot create '{}': {}", dir, ec.message()));
    const std::string name = label ? label : "run";
    fdtr::write_trace_csv(run->result, out / "trace.csv");
    fdtr::write_convergence_csv(run->result, out / "convergence.csv");
    fdtr::write_overlay_csv({{name, &run->result}}, problem->problem.evaluator->sweep(),
                            out / "final_response.csv");
    fdtr::write_run_json(run->result, name, out / "result.json");
    return FDTR_OK;
  });
}

fdtr_status fdtr_sweep_run(const char* plan_path, size_t jobs, fdtr_sweep** out) {
  if (!plan_path || !out) return fail(FDTR_ERR_USAGE, "fdtr_sweep_run: null argument");
  *out = nullptr;
  return guarded([&] {
    fdtr::SweepPlan plan = fdtr::load_plan(plan_path);
    if (jobs > 0) plan.jobs = jobs;
    fdtr::SweepTable table = fdtr::run_sweep(plan);
    *out = new fdtr_sweep{std::move(table), plan.problem.sweep()};
    return FDTR_OK;
  });
}

void fdtr_sweep_destroy(fdtr_sweep* sweep) { delete sweep; }

size_t fdtr_sweep_cells(const fdtr_sweep* sweep) { return sweep ? sweep->table.cells.size() : 0; }

size_t fdtr_sweep_failed_cells(const fdtr_sweep* sweep) {
  return sweep ? sweep->table.failed_cells() : 0;
}

fdtr_status fdtr_sweep_write(const fdtr_sweep* sweep, const char* dir) {
  if (!sweep || !dir) return fail(FDTR_ERR_USAGE, "fdtr_sweep_write: null argument");
  return guarded([&] {
    fdtr::write_sweep_outputs(sweep->table, sweep->frequencies, dir);
    return FDTR_OK;
  });
}

fdtr_status fdtr_sweep_render(const fdtr_sweep* sweep, const char* format, char** text) {
  if (!sweep || !format || !text) return fail(FDTR_ERR_USAGE, "fdtr_sweep_render: null argument");
  *text = nullptr;
  return guarded([&] {
    *text = dup_string(fdtr::render_table(sweep->table, fdtr::parse_table_format(format)));
    return FDTR_OK;
  });
}

fdtr_status fdtr_report(const char* dir, const char* format, char** text) {
  if (!dir || !format || !text) return fail(FDTR_ERR_USAGE, "fdtr_report: null argument");
  *text = nullptr;
  return guarded([&] {
    const fdtr::TableFormat f = fdtr::parse_table_format(format);
    *text = dup_string(fdtr::render_table(fdtr::read_sweep_cells(dir), f));
    return FDTR_OK;
  });
}

fdtr_status fdtr_fd_curve(const char* function, double point, const char* steps,
                          const char* out_path) {
  if (!function || !steps || !out_path) return fail(FDTR_ERR_USAGE, "fdtr_fd_curve: null argument");
  return guarded([&] {
    std::function<double(double)> f, df;
    const std::string name = function;
    if (name == "sin") {
      f = [](double t) { return std::sin(t); };
      df = [](double t) { return std::cos(t); };
    } else if (name == "cos") {
      f = [](double t) { return std::cos(t); };
      df = [](double t) { return -std::sin(t); };
    } else if (name == "exp") {
      f = [](double t) { return std::exp(t); };
      df = [](double t) { return std::exp(t); };
    } else {
      return fail(FDTR_ERR_CONFIG, fmt::format("unknown function '{}' (sin, cos, exp)", name));
    }
    const auto hs = fdtr::parse_steps(steps);
    fdtr::write_fd_curve_csv(fdtr::fd_error_curve(f, df, point, hs), out_path);
    return FDTR_OK;
  });
}

int fdtr_serve_mock_stdio(const fdtr_problem_options* opts) {
  if (!opts) {
    fail(FDTR_ERR_USAGE, "fdtr_serve_mock_stdio: null argument");
    return 1;
  }
  try {
    const fdtr::ProblemSelector sel = selector_from(*opts);
    if (sel.name.rfind("cmd:", 0) == 0) {
      fail(FDTR_ERR_CONFIG, "serve-mock needs a built-in problem");
      return 1;
    }
    // Validate the name up front.
    (void)fdtr::make_problem(sel.name, sel.noise, sel.sweep());
    const fdtr::EvaluatorFactory factory = [&](const fdtr::FrequencySweep& s) {
      return fdtr::make_problem(sel.name, sel.noise, s).evaluator;
    };
    return fdtr::serve_mock(factory, std::cin, std::cout, std::cerr);
  } catch (const std::exception& e) {
    fail(FDTR_ERR_CONFIG, e.what());
    return 1;
  }
}

}  // extern "C"
