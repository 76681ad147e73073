#include "fdtr/bench.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "fdtr/adapter.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace fdtr {

using nlohmann::json;
using detail::num;

namespace {

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw Error(ErrorKind::Config, fmt::format("cannot parse number '{}' in '{}'", item, text));
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::Config, "empty number list");
  return out;
}

}  // namespace

FrequencySweep ProblemSelector::sweep() const {
  return FrequencySweep::uniform(sweep_lo, sweep_hi, sweep_points, band_lo, band_hi);
}

Problem ProblemSelector::instantiate(std::size_t dimension) const {
  const FrequencySweep s = sweep();
  if (name.rfind("cmd:", 0) == 0) {
    const std::string command = name.substr(4);
    if (command.empty()) throw Error(ErrorKind::Config, "empty evaluator command");
    Bounds b = bounds ? *bounds : fixtures::antenna_bounds();
    if (b.size() != dimension)
      throw Error(ErrorKind::Config,
                  fmt::format("external problem: bounds are {}-dimensional, design has {}",
                              b.size(), dimension));
    return {std::make_unique<ExternalEvaluator>(command, dimension, s, timeout), std::move(b)};
  }
  Problem p = make_problem(name, noise, s);
  if (bounds) p.bounds = *bounds;
  return p;
}

std::pair<std::string, DesignVector> parse_design(const std::string& text) {
  if (auto d = fixtures::find_design(text))
    return {d->name, DesignVector(std::vector<double>(d->x.begin(), d->x.end()))};
  if (text.find_first_of("0123456789") == std::string::npos)
    throw Error(ErrorKind::Config,
                fmt::format("unknown design '{}' (expected x1..x10 or a comma list)", text));
  return {"custom", DesignVector(parse_number_list(text))};
}

void SweepPlan::validate() const {
  if (designs.empty()) throw Error(ErrorKind::Config, "sweep plan has no designs");
  if (schemes.empty()) throw Error(ErrorKind::Config, "sweep plan has no schemes");
  if (jobs == 0) throw Error(ErrorKind::Config, "sweep plan needs jobs >= 1");
  trust.validate();
  problem.noise.validate();
  std::map<std::string, int> seen;
  for (const auto& s : schemes)
    if (seen[s.label]++)
      throw Error(ErrorKind::Config, fmt::format("duplicate scheme label '{}'", s.label));
  seen.clear();
  for (const auto& d : designs)
    if (seen[d.label]++)
      throw Error(ErrorKind::Config, fmt::format("duplicate design label '{}'", d.label));
}

SweepPlan parse_plan(const std::string& json_text) {
  const json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorKind::Config, "plan is not a JSON object");
  SweepPlan plan;
  try {
    if (j.contains("problem")) plan.problem.name = j.at("problem").get<std::string>();
    if (j.contains("noise")) {
      const json& n = j.at("noise");
      plan.problem.noise.amplitude_db = n.value("amplitude_db", plan.problem.noise.amplitude_db);
      plan.problem.noise.cell_fraction = n.value("cell_fraction", plan.problem.noise.cell_fraction);
      plan.problem.noise.seed = n.value("seed", plan.problem.noise.seed);
    }
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      plan.problem.sweep_lo = s.value("lo", plan.problem.sweep_lo);
      plan.problem.sweep_hi = s.value("hi", plan.problem.sweep_hi);
      plan.problem.sweep_points = s.value("points", plan.problem.sweep_points);
      plan.problem.band_lo = s.value("band_lo", plan.problem.band_lo);
      plan.problem.band_hi = s.value("band_hi", plan.problem.band_hi);
    }
    if (j.contains("lower") || j.contains("upper"))
      plan.problem.bounds = Bounds(j.at("lower").get<std::vector<double>>(),
                                   j.at("upper").get<std::vector<double>>());
    if (j.contains("timeout_s"))
      plan.problem.timeout = std::chrono::milliseconds(
          static_cast<long long>(j.at("timeout_s").get<double>() * 1000.0));

    for (const json& d : j.at("designs")) {
      if (d.is_string()) {
        auto [label, x] = parse_design(d.get<std::string>());
        if (label == "custom") label = fmt::format("d{}", plan.designs.size() + 1);
        plan.designs.push_back({label, std::move(x)});
      } else if (d.is_array()) {
        plan.designs.push_back({fmt::format("d{}", plan.designs.size() + 1),
                                DesignVector(d.get<std::vector<double>>())});
      } else {
        plan.designs.push_back({d.at("label").get<std::string>(),
                                DesignVector(d.at("x").get<std::vector<double>>())});
      }
    }

    std::map<std::string, std::size_t> overhead;
    if (j.contains("overhead_evals"))
      for (const auto& [k, v] : j.at("overhead_evals").items()) overhead[k] = v.get<std::size_t>();
    for (const json& s : j.at("schemes")) {
      PlanScheme ps{FractionOfInitial{0.01}, "", std::nullopt};
      if (s.is_string()) {
        ps.scheme = parse_scheme(s.get<std::string>());
        ps.label = scheme_label(ps.scheme);
      } else {
        ps.scheme = parse_scheme(s.at("scheme").get<std::string>());
        ps.label = s.value("label", scheme_label(ps.scheme));
        if (s.contains("overhead_evals")) ps.overhead_evals = s.at("overhead_evals").get<std::size_t>();
      }
      if (auto it = overhead.find(ps.label); it != overhead.end()) ps.overhead_evals = it->second;
      plan.schemes.push_back(std::move(ps));
    }

    if (j.contains("trust")) {
      const json& t = j.at("trust");
      TrustConfig& c = plan.trust;
      c.alpha1 = t.value("alpha1", c.alpha1);
      c.alpha2 = t.value("alpha2", c.alpha2);
      c.rho_low = t.value("rho_low", c.rho_low);
      c.rho_high = t.value("rho_high", c.rho_high);
      c.delta0 = t.value("delta0", c.delta0);
      c.term_eps = t.value("term_eps", c.term_eps);
      c.max_evals = t.value("max_evals", c.max_evals);
      if (t.value("normalize_box", false)) c.norm = NormKind::EuclideanUnitBox;
      c.parallel_probes = t.value("parallel_probes", c.parallel_probes);
    }
    plan.jobs = j.value("jobs", plan.jobs);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, fmt::format("invalid plan: {}", e.what()));
  }
  plan.validate();
  return plan;
}

SweepPlan load_plan(const std::filesystem::path& path) {
  return parse_plan(detail::read_text(path));
}

Stats sample_stats(std::span<const double> values) {
  Stats s;
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  s.mean = sum / n;
  if (values.size() >= 2) {
    double ss = 0;
    for (double v : values) ss += (v - *s.mean) * (v - *s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

void SweepTable::aggregate() {
  aggregates.assign(scheme_labels.size(), {});
  for (std::size_t s = 0; s < scheme_labels.size(); ++s) {
    std::vector<double> u, e;
    SchemeAggregate& agg = aggregates[s];
    for (std::size_t d = 0; d < design_labels.size(); ++d) {
      const SweepCell& c = cell(d, s);
      if (!c.objective) {
        ++agg.excluded;
        continue;
      }
      u.push_back(*c.objective);
      e.push_back(static_cast<double>(c.evaluations));
    }
    agg.included = u.size();
    agg.objective = sample_stats(u);
    agg.evaluations = sample_stats(e);
    agg.overhead_evals = s < overhead_evals.size() ? overhead_evals[s] : std::nullopt;
  }
}

std::size_t SweepTable::failed_cells() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.objective ? 0 : 1;
  return n;
}

SweepTable run_sweep(const SweepPlan& plan) {
  plan.validate();
  SweepTable t;
  for (const auto& d : plan.designs) t.design_labels.push_back(d.label);
  for (const auto& s : plan.schemes) {
    t.scheme_labels.push_back(s.label);
    t.scheme_specs.push_back(scheme_spec(s.scheme));
    t.overhead_evals.push_back(s.overhead_evals);
  }
  const std::size_t ns = plan.schemes.size();
  t.cells.resize(plan.cell_count());

  auto run_cell = [&](std::size_t index) {
    SweepCell& c = t.cells[index];
    c.design = index / ns;
    c.scheme = index % ns;
    try {
      const DesignVector& x0 = plan.designs[c.design].x;
      Problem p = plan.problem.instantiate(x0.size());
      TrustConfig cfg = plan.trust;
      cfg.scheme = plan.schemes[c.scheme].scheme;
      auto run = std::make_shared<RunResult>(optimize(*p.evaluator, x0, p.bounds, cfg));
      c.evaluations = run->evaluations;
      c.termination = run->termination;
      if (run->failed()) c.error = run->error;
      else c.objective = run->best_objective;
      c.run = std::move(run);
    } catch (const std::exception& e) {
      c.termination = Termination::EvaluatorFailure;
      c.error = e.what();
    }
  };

  const std::size_t workers = std::min(plan.jobs, t.cells.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < t.cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < t.cells.size(); i = next++) run_cell(i);
      });
  }
  t.aggregate();
  return t;
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "markdown" || name == "md") return TableFormat::Markdown;
  if (name == "csv") return TableFormat::Csv;
  throw Error(ErrorKind::Config, fmt::format("unknown table format '{}'", name));
}

namespace {

std::string db1(const std::optional<double>& v) {
  return v ? fmt::format("{:.1f}", *v) : "-";
}
std::string db2(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", *v) : "-";
}
std::string count(const std::optional<double>& v) {
  return v ? fmt::format("{:.0f}", *v) : "-";
}

struct Grid {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Grid table_grid(const SweepTable& t) {
  Grid g;
  g.header.push_back("design");
  for (const auto& s : t.scheme_labels) {
    g.header.push_back(s + "_U");
    g.header.push_back(s + "_evals");
  }
  for (std::size_t d = 0; d < t.design_labels.size(); ++d) {
    std::vector<std::string> row{t.design_labels[d]};
    for (std::size_t s = 0; s < t.scheme_labels.size(); ++s) {
      const SweepCell& c = t.cell(d, s);
      row.push_back(db1(c.objective));
      row.push_back(c.objective ? fmt::format("{}", c.evaluations) : "-");
    }
    g.rows.push_back(std::move(row));
  }
  std::vector<std::string> mean{"E^s"}, sd{"σ^s"}, over{"overhead_evals"};
  bool any_overhead = false;
  for (const auto& a : t.aggregates) {
    mean.push_back(db1(a.objective.mean));
    mean.push_back(count(a.evaluations.mean));
    sd.push_back(db2(a.objective.sd));
    sd.push_back(count(a.evaluations.sd));
    over.push_back("-");
    over.push_back(a.overhead_evals ? fmt::format("{}", *a.overhead_evals) : "-");
    any_overhead = any_overhead || a.overhead_evals.has_value();
  }
  g.rows.push_back(std::move(mean));
  g.rows.push_back(std::move(sd));
  if (any_overhead) g.rows.push_back(std::move(over));
  return g;
}

}  // namespace

std::string render_table(const SweepTable& t, TableFormat format) {
  const Grid g = table_grid(t);
  std::string out;
  if (format == TableFormat::Csv) {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out += ',';
        out += csv_field(cells[k]);
      }
      out += '\n';
    };
    line(g.header);
    for (const auto& r : g.rows) line(r);
    return out;
  }
  auto line = [&](const std::vector<std::string>& cells) {
    out += '|';
    for (const auto& c : cells) out += ' ' + c + " |";
    out += '\n';
  };
  line(g.header);
  out += '|';
  for (std::size_t k = 0; k < g.header.size(); ++k) out += k ? " ---: |" : " --- |";
  out += '\n';
  for (const auto& r : g.rows) line(r);
  if (const std::size_t failed = t.failed_cells(); failed)
    out += fmt::format("\n{} cell(s) failed and are excluded from E^s / σ^s.\n", failed);
  return out;
}

void write_sweep_outputs(const SweepTable& t, const FrequencySweep& sweep,
                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  std::string cells = "design,scheme,scheme_spec,objective_db,evals,termination,overhead_evals,error\n";
  for (const auto& c : t.cells) {
    const auto& over = t.overhead_evals[c.scheme];
    cells += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(t.design_labels[c.design]),
                         csv_field(t.scheme_labels[c.scheme]), csv_field(t.scheme_specs[c.scheme]),
                         c.objective ? num(*c.objective) : "", c.evaluations,
                         to_string(c.termination), over ? fmt::format("{}", *over) : "",
                         csv_field(c.error));
  }
  detail::write_text(dir / "cells.csv", cells);
  detail::write_text(dir / "table.md", render_table(t, TableFormat::Markdown));
  detail::write_text(dir / "table.csv", render_table(t, TableFormat::Csv));

  for (std::size_t d = 0; d < t.design_labels.size(); ++d) {
    std::vector<std::pair<std::string, const RunResult*>> overlay;
    for (std::size_t s = 0; s < t.scheme_labels.size(); ++s) {
      const SweepCell& c = t.cell(d, s);
      if (!c.run) continue;
      const std::string tag = file_token(t.design_labels[d]) + "_" + file_token(t.scheme_labels[s]);
      write_trace_csv(*c.run, dir / ("trace_" + tag + ".csv"));
      write_convergence_csv(*c.run, dir / ("convergence_" + tag + ".csv"));
      if (!c.run->failed()) overlay.emplace_back(t.scheme_labels[s], c.run.get());
    }
    if (!overlay.empty())
      write_overlay_csv(overlay, sweep,
                        dir / ("final_response_" + file_token(t.design_labels[d]) + ".csv"));
  }
}

SweepTable read_sweep_cells(const std::filesystem::path& dir) {
  const auto rows = parse_csv(detail::read_text(dir / "cells.csv"));
  if (rows.empty() || rows[0].size() < 8 || rows[0][0] != "design")
    throw Error(ErrorKind::Io, fmt::format("'{}' is not a cells.csv file", (dir / "cells.csv").string()));
  SweepTable t;
  std::map<std::string, std::size_t> design_index, scheme_index;
  struct Raw {
    std::size_t d, s;
    SweepCell cell;
  };
  std::vector<Raw> raws;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 8) throw Error(ErrorKind::Io, fmt::format("cells.csv line {} is short", i + 1));
    auto [dit, dnew] = design_index.try_emplace(r[0], t.design_labels.size());
    if (dnew) t.design_labels.push_back(r[0]);
    auto [sit, snew] = scheme_index.try_emplace(r[1], t.scheme_labels.size());
    if (snew) {
      t.scheme_labels.push_back(r[1]);
      t.scheme_specs.push_back(r[2]);
      t.overhead_evals.push_back(r[6].empty() ? std::nullopt
                                              : std::optional<std::size_t>(std::stoull(r[6])));
    }
    SweepCell c;
    c.design = dit->second;
    c.scheme = sit->second;
    if (!r[3].empty()) c.objective = std::stod(r[3]);
    c.evaluations = static_cast<std::size_t>(std::stoull(r[4]));
    for (Termination k : {Termination::None, Termination::Radius, Termination::Step,
                          Termination::Budget, Termination::EvaluatorFailure})
      if (r[5] == to_string(k)) c.termination = k;
    c.error = r[7];
    raws.push_back({c.design, c.scheme, std::move(c)});
  }
  t.cells.resize(t.design_labels.size() * t.scheme_labels.size());
  std::vector<bool> filled(t.cells.size(), false);
  for (auto& raw : raws) {
    const std::size_t k = raw.d * t.scheme_labels.size() + raw.s;
    t.cells[k] = std::move(raw.cell);
    filled[k] = true;
  }
  for (std::size_t k = 0; k < t.cells.size(); ++k) {
    if (filled[k]) continue;
    t.cells[k].design = k / t.scheme_labels.size();
    t.cells[k].scheme = k % t.scheme_labels.size();
    t.cells[k].termination = Termination::EvaluatorFailure;
    t.cells[k].error = "missing from cells.csv";
  }
  t.aggregate();
  return t;
}

}  // namespace fdtr
