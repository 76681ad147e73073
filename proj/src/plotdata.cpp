#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fdtr/bench.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace fdtr {

namespace detail {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write '{}'", file.string()));
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, fmt::format("failed writing '{}'", file.string()));
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read '{}'", file.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

using detail::num;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string file_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

void write_trace_csv(const RunResult& run, const std::filesystem::path& file) {
  std::string text = "iter,accepted,rho,delta,step_norm,objective_db,cum_evals\n";
  for (const auto& r : run.trace)
    text += fmt::format("{},{},{},{},{},{},{}\n", r.iter, r.accepted ? 1 : 0, num(r.rho),
                        num(r.delta), num(r.step_norm), num(r.objective_db), r.cum_evals);
  detail::write_text(file, text);
}

void write_convergence_csv(const RunResult& run, const std::filesystem::path& file) {
  std::string text = "iter,objective_db,best_db,delta\n";
  double best = run.initial_objective;
  for (const auto& r : run.trace) {
    if (r.accepted) best = r.objective_db;
    text += fmt::format("{},{},{},{}\n", r.iter, num(r.objective_db), num(best), num(r.delta));
  }
  detail::write_text(file, text);
}

void write_overlay_csv(const std::vector<std::pair<std::string, const RunResult*>>& runs,
                       const FrequencySweep& sweep, const std::filesystem::path& file) {
  std::string text = "freq";
  for (const auto& [label, run] : runs) text += "," + csv_field("run_" + label + "_db");
  text += '\n';
  for (std::size_t j = 0; j < sweep.size(); ++j) {
    text += num(sweep.points()[j]);
    for (const auto& [label, run] : runs) {
      text += ',';
      if (run && j < run->best_response.size()) text += num(run->best_response.r_db[j]);
    }
    text += '\n';
  }
  detail::write_text(file, text);
}

void write_fd_curve_csv(const std::vector<FdErrorRow>& rows,
                        const std::filesystem::path& file) {
  std::string text = "step,residual,abs_residual\n";
  for (const auto& r : rows) {
    if (r.valid)
      text += fmt::format("{},{},{}\n", num(r.step), num(r.residual), num(r.abs_residual));
    else
      text += fmt::format("{},nan,nan\n", num(r.step));
  }
  detail::write_text(file, text);
}

void write_run_json(const RunResult& run, const std::string& label,
                    const std::filesystem::path& file) {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["initial_design"] = std::vector<double>(run.initial.values().begin(), run.initial.values().end());
  j["initial_objective_db"] = run.initial_objective;
  j["best_design"] = std::vector<double>(run.best.values().begin(), run.best.values().end());
  j["best_objective_db"] = run.best_objective;
  j["evaluations"] = run.evaluations;
  j["jacobian_builds"] = run.jacobian_builds;
  j["trials"] = run.trace.size();
  j["termination"] = to_string(run.termination);
  if (run.failed()) {
    j["error_kind"] = run.error_kind ? to_string(*run.error_kind) : "unknown";
    j["error"] = run.error;
  }
  detail::write_text(file, j.dump(2) + "\n");
}

}  // namespace fdtr
