#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fdtr/core.hpp"
#include "fdtr/perturb.hpp"
#include "fdtr/problems.hpp"
#include "fdtr/trustloop.hpp"

namespace fdtr {

// ---------------------------------------------------------------------------
// Problem selection shared by the CLI and sweep plans.

struct ProblemSelector {
  std::string name = "antenna";  // "antenna", "quadratic" or "cmd:<command>"
  NoiseSpec noise;
  std::optional<Bounds> bounds;  // defaults to the antenna box
  double sweep_lo = 4.0;
  double sweep_hi = 7.0;
  std::size_t sweep_points = 201;
  double band_lo = fixtures::band_lo_ghz;
  double band_hi = fixtures::band_hi_ghz;
  std::chrono::milliseconds timeout = std::chrono::seconds(600);

  FrequencySweep sweep() const;
  /// Fresh evaluator; `dimension` is only consulted for external commands.
  Problem instantiate(std::size_t dimension) const;
};

/// Fixture name ("x1".."x10") or comma-separated values.
std::pair<std::string, DesignVector> parse_design(const std::string& text);

// ---------------------------------------------------------------------------
// Sweeps.

struct PlanDesign {
  std::string label;
  DesignVector x;
};

struct PlanScheme {
  PerturbationScheme scheme;
  std::string label;
  /// Evaluations spent outside the run (e.g. hand-tuning the steps);
  /// reported separately, never added to measured counts.
  std::optional<std::size_t> overhead_evals;
};

struct SweepPlan {
  ProblemSelector problem;
  std::vector<PlanDesign> designs;
  std::vector<PlanScheme> schemes;
  TrustConfig trust;  // scheme field is replaced per cell
  std::size_t jobs = 1;

  void validate() const;
  std::size_t cell_count() const { return designs.size() * schemes.size(); }
};

/// JSON plan document, e.g.
///   {"problem":"antenna","noise":{"amplitude_db":0.5,"cell_fraction":0.001,"seed":7},
///    "designs":["x1","x2"],"schemes":["fraction:0.005","fraction:0.03"],
///    "trust":{"delta0":1},"jobs":4}
SweepPlan parse_plan(const std::string& json_text);
SweepPlan load_plan(const std::filesystem::path& path);

struct SweepCell {
  std::size_t design = 0;  // index into designs
  std::size_t scheme = 0;  // index into schemes
  std::optional<double> objective;  // empty when the cell failed
  std::size_t evaluations = 0;
  Termination termination = Termination::None;
  std::string error;
  std::shared_ptr<const RunResult> run;  // absent when loaded from disk
};

/// Mean and sample (n - 1) standard deviation.
struct Stats {
  std::optional<double> mean;
  std::optional<double> sd;  // undefined for fewer than two values
};
Stats sample_stats(std::span<const double> values);

struct SchemeAggregate {
  Stats objective;
  Stats evaluations;
  std::size_t included = 0;
  std::size_t excluded = 0;  // failed cells
  std::optional<std::size_t> overhead_evals;
};

struct SweepTable {
  std::vector<std::string> design_labels;
  std::vector<std::string> scheme_labels;
  std::vector<std::string> scheme_specs;
  std::vector<std::optional<std::size_t>> overhead_evals;
  std::vector<SweepCell> cells;  // design-major: cells[d * schemes + s]
  std::vector<SchemeAggregate> aggregates;

  const SweepCell& cell(std::size_t design, std::size_t scheme) const {
    return cells[design * scheme_labels.size() + scheme];
  }
  /// Recomputes aggregates from the cells.
  void aggregate();
  std::size_t failed_cells() const;
};

/// One optimize run per cell, each with its own evaluator and cache.
/// Parallel execution (plan.jobs > 1) gives the same table as sequential.
SweepTable run_sweep(const SweepPlan& plan);

enum class TableFormat { Markdown, Csv };
TableFormat parse_table_format(const std::string& name);

/// Designs as rows, (U, evaluations) column pairs per scheme, E^s and σ^s
/// footer rows. dB values with one decimal, σ of dB with two, counts as
/// integers, "-" where no value exists.
std::string render_table(const SweepTable& t, TableFormat format);

// ---------------------------------------------------------------------------
// Files.

/// Writes cells.csv, table.md, table.csv and the per-run plot data of a
/// sweep into dir.
void write_sweep_outputs(const SweepTable& t, const FrequencySweep& sweep,
                         const std::filesystem::path& dir);

/// Reads cells.csv back (runs are not restored) and recomputes aggregates.
SweepTable read_sweep_cells(const std::filesystem::path& dir);

/// header iter,accepted,rho,delta,step_norm,objective_db,cum_evals
void write_trace_csv(const RunResult& run, const std::filesystem::path& file);
/// header iter,objective_db,best_db,delta
void write_convergence_csv(const RunResult& run, const std::filesystem::path& file);
/// header freq,run_<label>_db,... (best response of each run)
void write_overlay_csv(const std::vector<std::pair<std::string, const RunResult*>>& runs,
                       const FrequencySweep& sweep, const std::filesystem::path& file);
/// header step,residual,abs_residual
void write_fd_curve_csv(const std::vector<FdErrorRow>& rows,
                        const std::filesystem::path& file);
/// Summary of a single run as JSON.
void write_run_json(const RunResult& run, const std::string& label,
                    const std::filesystem::path& file);

/// RFC 4180 quoting when needed.
std::string csv_field(const std::string& s);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
/// Replaces characters unsafe in file names.
std::string file_token(const std::string& s);

}  // namespace fdtr
