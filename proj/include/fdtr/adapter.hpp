#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fdtr/core.hpp"

namespace fdtr {

// Line-delimited JSON, one object per line:
//   request  {"id":1,"x":[...],"freq":[...]}
//   response {"id":1,"r_db":[...]}  or  {"id":1,"error":"..."}
// Doubles are written with 17 significant digits so they round-trip exactly.

struct ProtocolRequest {
  std::uint64_t id = 0;
  std::vector<double> x;
  std::vector<double> freq;
};

struct ProtocolResponse {
  std::uint64_t id = 0;
  std::optional<std::vector<double>> r_db;  // null entries decode to NaN
  std::optional<std::string> error;
};

std::string encode_request(const ProtocolRequest& req);
std::string encode_response(const ProtocolResponse& resp);

/// Throws Error{Protocol}. When the line is an object with an integer id but
/// otherwise malformed, the id is reported through `id_out`.
ProtocolRequest decode_request(const std::string& line,
                               std::optional<std::uint64_t>* id_out = nullptr);
ProtocolResponse decode_response(const std::string& line);

/// `/bin/sh -c command` with its stdin/stdout connected to us.
class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  void write_line(const std::string& line);
  /// Throws Error{Timeout} or Error{ProcessExited}.
  std::string read_line(std::chrono::milliseconds timeout);
  /// Closes the child's stdin and reaps it. Returns the exit status, or -1
  /// when the child had to be killed.
  int close();

  int pid() const noexcept { return pid_; }

 private:
  int fd_ = -1;
  int pid_ = -1;
  bool reaped_ = false;
  int status_ = 0;
  std::string buffer_;

  std::string exit_description();
};

/// Sends one request and waits for the matching response.
ResponseCurve external_evaluate(ChildProcess& child, std::uint64_t id,
                                const DesignVector& x, const FrequencySweep& sweep,
                                std::chrono::milliseconds timeout);

/// Evaluator backed by an external program. One request in flight at a time;
/// concurrent callers are serialised. No caching happens here.
class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(const std::string& command, std::size_t dimension,
                    FrequencySweep sweep,
                    std::chrono::milliseconds timeout = std::chrono::seconds(600));

  std::size_t dimension() const override { return dim_; }
  const FrequencySweep& sweep() const override { return sweep_; }
  ResponseCurve evaluate(const DesignVector& x) override;

  std::uint64_t requests_sent() const;

 private:
  std::size_t dim_;
  FrequencySweep sweep_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  std::unique_ptr<ChildProcess> child_;
  std::uint64_t next_id_ = 1;
  std::optional<std::string> broken_;  // set after a timeout or exit
};

/// Builds an evaluator for the frequencies a request carries.
using EvaluatorFactory =
    std::function<std::unique_ptr<Evaluator>(const FrequencySweep&)>;

/// Answers requests from `in` on `out` until end of input, one response per
/// request, in order. Returns the process exit status (0 on clean EOF).
int serve_mock(const EvaluatorFactory& factory, std::istream& in,
               std::ostream& out, std::ostream& err);

}  // namespace fdtr
