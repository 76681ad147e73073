// Command-line front end. Talks to the engine only through the C API.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fdtr/fdtr.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int report_failure(fdtr_status status, const char* what) {
  std::fprintf(stderr, "fdtr: %s failed (%s): %s\n", what, fdtr_status_name(status),
               fdtr_last_error());
  // Bad configuration is the caller's mistake, everything else is runtime.
  const bool usage = status == FDTR_ERR_USAGE || status == FDTR_ERR_CONFIG ||
                     status == FDTR_ERR_DIMENSION;
  return usage ? kExitUsage : kExitRuntime;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

struct ProblemArgs {
  std::string problem = "antenna";
  double noise_amplitude = -1;  // negative: library default
  double cell_fraction = -1;
  uint64_t seed = 1;
  std::string lower, upper;
  double timeout_s = 600;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--problem,--evaluator", problem,
                    "antenna | quadratic | cmd:\"<program and args>\"");
    cmd->add_option("--noise-amplitude", noise_amplitude, "mesh-noise amplitude in dB (antenna)");
    cmd->add_option("--cell-fraction", cell_fraction, "noise cell size as a fraction of each range");
    cmd->add_option("--seed", seed, "noise seed");
    cmd->add_option("--lower", lower, "comma-separated lower bounds (default: antenna box)");
    cmd->add_option("--upper", upper, "comma-separated upper bounds");
    cmd->add_option("--timeout", timeout_s, "per-request timeout for external evaluators (s)");
  }

  // Storage for bounds must outlive the options struct.
  std::vector<double> lo, up;

  fdtr_problem_options options(size_t dimension) {
    fdtr_problem_options o;
    fdtr_problem_options_default(&o);
    o.name = problem.c_str();
    if (noise_amplitude >= 0) o.noise_amplitude_db = noise_amplitude;
    if (cell_fraction > 0) o.noise_cell_fraction = cell_fraction;
    o.noise_seed = seed;
    o.timeout_s = timeout_s;
    o.dimension = dimension;
    if (!lower.empty() || !upper.empty()) {
      lo = parse_list(lower);
      up = parse_list(upper);
      if (lo.size() != up.size()) throw CLI::ValidationError("--lower/--upper lengths differ");
      o.lower = lo.data();
      o.upper = up.data();
      o.bounds_dim = lo.size();
    }
    return o;
  }
};

int cmd_optimize(ProblemArgs& pa, const std::string& design, const std::string& scheme,
                 bool normalize_box, bool parallel, uint64_t max_evals, const std::string& out,
                 const std::string& label_arg) {
  size_t dim = 0;
  fdtr_design_parse(design.c_str(), nullptr, 0, &dim);
  if (dim == 0) return report_failure(FDTR_ERR_CONFIG, "--design");
  std::vector<double> x0(dim);
  if (auto s = fdtr_design_parse(design.c_str(), x0.data(), x0.size(), &dim); s != FDTR_OK)
    return report_failure(s, "--design");

  const fdtr_problem_options po = pa.options(dim);
  fdtr_problem* problem = nullptr;
  if (auto s = fdtr_problem_create(&po, &problem); s != FDTR_OK)
    return report_failure(s, "problem setup");

  fdtr_trust_options to;
  fdtr_trust_options_default(&to);
  to.scheme = scheme.c_str();
  to.normalize_box = normalize_box ? 1 : 0;
  to.parallel_probes = parallel ? 1 : 0;
  to.max_evals = max_evals;

  fdtr_run* run = nullptr;
  const fdtr_status s = fdtr_optimize(problem, x0.data(), x0.size(), &to, &run);
  const std::string failure = s == FDTR_OK ? "" : fdtr_last_error();
  int code = kExitOk;
  if (run) {
    const std::string label = label_arg.empty() ? "run" : label_arg;
    if (auto w = fdtr_run_write(run, problem, out.c_str(), label.c_str()); w != FDTR_OK)
      code = report_failure(w, "writing results");
    std::printf("U(x*) = %.4f dB  evaluations = %zu  trials = %zu  termination = %s\n",
                fdtr_run_best_objective(run), fdtr_run_evaluations(run), fdtr_run_trials(run),
                fdtr_run_termination(run));
  }
  if (s != FDTR_OK) {
    std::fprintf(stderr, "fdtr: optimize failed (%s): %s\n", fdtr_status_name(s), failure.c_str());
    code = run ? kExitRuntime : report_failure(s, "optimize");
  }
  fdtr_run_destroy(run);
  fdtr_problem_destroy(problem);
  return code;
}

int cmd_sweep(const std::string& plan, const std::string& out, size_t jobs,
              const std::string& format) {
  fdtr_sweep* sweep = nullptr;
  if (auto s = fdtr_sweep_run(plan.c_str(), jobs, &sweep); s != FDTR_OK)
    return report_failure(s, "sweep");
  int code = kExitOk;
  if (auto s = fdtr_sweep_write(sweep, out.c_str()); s != FDTR_OK) code = report_failure(s, "writing sweep");
  char* text = nullptr;
  if (fdtr_sweep_render(sweep, format.c_str(), &text) == FDTR_OK) std::fputs(text, stdout);
  fdtr_string_free(text);
  if (code == kExitOk && fdtr_sweep_failed_cells(sweep) > 0) {
    std::fprintf(stderr, "fdtr: %zu of %zu cells failed\n", fdtr_sweep_failed_cells(sweep),
                 fdtr_sweep_cells(sweep));
    code = kExitRuntime;
  }
  fdtr_sweep_destroy(sweep);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-region optimisation with forward finite-difference surrogates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fdtr_version()));

  ProblemArgs opt_problem;
  std::string design = "x1", scheme = "fraction:0.01", out, label;
  bool normalize_box = false, parallel = false;
  uint64_t max_evals = 0;
  auto* optimize = app.add_subcommand("optimize", "run one trust-region optimisation");
  opt_problem.add_to(optimize);
  optimize->add_option("--design", design, "x1..x10 or comma-separated values")->capture_default_str();
  optimize->add_option("--scheme", scheme, "fraction:F | sqrteps:E | custom:f1,...,fD")
      ->capture_default_str();
  optimize->add_flag("--normalize-box", normalize_box, "measure the radius in the unit box");
  optimize->add_flag("--parallel-probes", parallel, "evaluate Jacobian probes concurrently");
  optimize->add_option("--max-evals", max_evals, "evaluation budget (0 = 200*(D+1))");
  optimize->add_option("--label", label, "column label in final_response.csv");
  optimize->add_option("--out", out, "output directory")->required();

  std::string plan, sweep_out, format = "markdown";
  size_t jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "run a designs x schemes benchmark plan");
  sweep->add_option("--plan", plan, "JSON plan file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "output directory")->required();
  sweep->add_option("--jobs", jobs, "parallel cells (default: plan value)");
  sweep->add_option("--format", format, "table printed to stdout: markdown | csv");

  std::string function = "sin", steps = "log:1e-12:1e-1:60", curve_out;
  double point = 0.7853981633974483;
  auto* curve = app.add_subcommand("fd-curve", "forward-difference error versus step size");
  curve->add_option("--function", function, "sin | cos | exp")->capture_default_str();
  curve->add_option("--point", point, "evaluation point")->capture_default_str();
  curve->add_option("--steps", steps, "log:LO:HI:N or comma list")->capture_default_str();
  curve->add_option("--out", curve_out, "CSV file")->required();

  std::string report_in, report_format = "markdown";
  auto* report = app.add_subcommand("report", "render the table of a sweep directory");
  report->add_option("--in", report_in, "sweep output directory")->required();
  report->add_option("--format", report_format, "markdown | csv")->capture_default_str();

  ProblemArgs mock_problem;
  auto* mock = app.add_subcommand("serve-mock", "answer evaluator requests on stdin/stdout");
  mock_problem.add_to(mock);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*optimize)
      return cmd_optimize(opt_problem, design, scheme, normalize_box, parallel, max_evals, out, label);
    if (*sweep) return cmd_sweep(plan, sweep_out, jobs, format);
    if (*curve) {
      if (auto s = fdtr_fd_curve(function.c_str(), point, steps.c_str(), curve_out.c_str());
          s != FDTR_OK)
        return report_failure(s, "fd-curve");
      return kExitOk;
    }
    if (*report) {
      char* text = nullptr;
      if (auto s = fdtr_report(report_in.c_str(), report_format.c_str(), &text); s != FDTR_OK)
        return report_failure(s, "report");
      std::fputs(text, stdout);
      fdtr_string_free(text);
      return kExitOk;
    }
    if (*mock) {
      const fdtr_problem_options po = mock_problem.options(0);
      const int rc = fdtr_serve_mock_stdio(&po);
      if (rc != 0) std::fprintf(stderr, "fdtr: serve-mock: %s\n", fdtr_last_error());
      return rc;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fdtr: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
