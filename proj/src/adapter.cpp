#include "fdtr/adapter.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include "json.hpp"

extern char** environ;

namespace fdtr {

using nlohmann::json;

namespace {

void append_array(std::string& out, std::span<const double> v) {
  out += '[';
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ',';
    if (std::isfinite(v[k]))
      out += fmt::format("{:.17g}", v[k]);
    else
      out += "null";
  }
  out += ']';
}

std::string quote(const std::string& s) { return json(s).dump(); }

[[noreturn]] void protocol_error(const std::string& what) {
  throw Error(ErrorKind::Protocol, what);
}

std::vector<double> number_array(const json& j, const char* field,
                                 bool allow_null) {
  if (!j.contains(field)) protocol_error(fmt::format("missing field '{}'", field));
  const json& a = j.at(field);
  if (!a.is_array()) protocol_error(fmt::format("field '{}' is not an array", field));
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& e : a) {
    if (e.is_number())
      out.push_back(e.get<double>());
    else if (allow_null && e.is_null())
      out.push_back(std::nan(""));
    else
      protocol_error(fmt::format("field '{}' holds a non-numeric entry", field));
  }
  return out;
}

json parse_object(const std::string& line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) protocol_error("malformed JSON line: " + line);
  if (!j.is_object()) protocol_error("protocol line is not a JSON object: " + line);
  return j;
}

std::optional<std::uint64_t> read_id(const json& j) {
  if (j.contains("id") && j.at("id").is_number_unsigned())
    return j.at("id").get<std::uint64_t>();
  return std::nullopt;
}

}  // namespace

std::string encode_request(const ProtocolRequest& req) {
  std::string out = fmt::format("{{\"id\":{},\"x\":", req.id);
  append_array(out, req.x);
  out += ",\"freq\":";
  append_array(out, req.freq);
  out += '}';
  return out;
}

std::string encode_response(const ProtocolResponse& resp) {
  std::string out = fmt::format("{{\"id\":{},", resp.id);
  if (resp.r_db) {
    out += "\"r_db\":";
    append_array(out, *resp.r_db);
  } else {
    out += "\"error\":" + quote(resp.error.value_or("unspecified error"));
  }
  out += '}';
  return out;
}

ProtocolRequest decode_request(const std::string& line,
                               std::optional<std::uint64_t>* id_out) {
  const json j = parse_object(line);
  const auto id = read_id(j);
  if (id_out) *id_out = id;
  if (!id) protocol_error("request without a non-negative integer id");
  ProtocolRequest req;
  req.id = *id;
  req.x = number_array(j, "x", false);
  req.freq = number_array(j, "freq", false);
  if (req.x.empty() || req.freq.empty()) protocol_error("request arrays must be non-empty");
  return req;
}

ProtocolResponse decode_response(const std::string& line) {
  const json j = parse_object(line);
  const auto id = read_id(j);
  if (!id) protocol_error("response without a non-negative integer id: " + line);
  ProtocolResponse resp;
  resp.id = *id;
  const bool has_r = j.contains("r_db");
  const bool has_err = j.contains("error");
  if (has_r == has_err)
    protocol_error("response must carry exactly one of r_db / error: " + line);
  if (has_r) {
    resp.r_db = number_array(j, "r_db", true);
  } else {
    const json& e = j.at("error");
    resp.error = e.is_string() ? e.get<std::string>() : e.dump();
  }
  return resp;
}

ChildProcess::ChildProcess(const std::string& command) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    throw Error(ErrorKind::Io, fmt::format("socketpair: {}", std::strerror(errno)));

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, sv[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, sv[1], STDOUT_FILENO);

  // Own process group, so a kill also reaches whatever the shell started.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, &attr,
                               const_cast<char* const*>(argv), environ);
  posix_spawnattr_destroy(&attr);
  posix_spawn_file_actions_destroy(&actions);
  ::close(sv[1]);
  if (rc != 0) {
    ::close(sv[0]);
    throw Error(ErrorKind::ProcessExited,
                fmt::format("cannot start '{}': {}", command, std::strerror(rc)));
  }
  fd_ = sv[0];
  pid_ = pid;
}

ChildProcess::~ChildProcess() { close(); }

void ChildProcess::write_line(const std::string& line) {
  std::string data = line;
  data += '\n';
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::ProcessExited,
                  fmt::format("evaluator process not accepting input ({}); {}",
                              std::strerror(errno), exit_description()));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ChildProcess::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0)
      throw Error(ErrorKind::Timeout,
                  fmt::format("no response from evaluator within {} ms", timeout.count()));
    pollfd p{fd_, POLLIN, 0};
    const int pr = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::Io, fmt::format("poll: {}", std::strerror(errno)));
    }
    if (pr == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::ProcessExited,
                  fmt::format("reading from evaluator failed: {}", std::strerror(errno)));
    }
    if (n == 0)
      throw Error(ErrorKind::ProcessExited,
                  "evaluator closed its output; " + exit_description());
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string ChildProcess::exit_description() {
  if (!reaped_) {
    // Give a dying child a moment so the status is available.
    for (int i = 0; i < 50 && !reaped_; ++i) {
      if (::waitpid(pid_, &status_, WNOHANG) == pid_) reaped_ = true;
      else std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  if (!reaped_) return "process still running";
  if (WIFEXITED(status_)) return fmt::format("process exited with status {}", WEXITSTATUS(status_));
  if (WIFSIGNALED(status_)) return fmt::format("process killed by signal {}", WTERMSIG(status_));
  return "process ended";
}

int ChildProcess::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
  }
  if (pid_ > 0 && !reaped_) {
    for (int i = 0; i < 200 && !reaped_; ++i) {
      if (::waitpid(pid_, &status_, WNOHANG) == pid_) reaped_ = true;
      else std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (!reaped_) {
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, &status_, 0);
      reaped_ = true;
      status_ = -1;
    }
  }
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (status_ == -1) return -1;
  return WIFEXITED(status_) ? WEXITSTATUS(status_) : -1;
}

ResponseCurve external_evaluate(ChildProcess& child, std::uint64_t id,
                                const DesignVector& x, const FrequencySweep& sweep,
                                std::chrono::milliseconds timeout) {
  ProtocolRequest req;
  req.id = id;
  req.x.assign(x.values().begin(), x.values().end());
  req.freq.assign(sweep.points().begin(), sweep.points().end());
  child.write_line(encode_request(req));

  const ProtocolResponse resp = decode_response(child.read_line(timeout));
  if (resp.id != id)
    protocol_error(fmt::format("response id {} does not match request id {}", resp.id, id));
  if (resp.error)
    throw Error(ErrorKind::RemoteError, "evaluator reported: " + *resp.error);
  const auto& r = *resp.r_db;
  if (r.size() != sweep.size())
    protocol_error(fmt::format("response has {} samples, expected {}", r.size(), sweep.size()));
  ResponseCurve curve{r};
  if (!curve.all_finite())
    throw Error(ErrorKind::Evaluation, "evaluator returned a non-finite response");
  return curve;
}

ExternalEvaluator::ExternalEvaluator(const std::string& command, std::size_t dimension,
                                     FrequencySweep sweep, std::chrono::milliseconds timeout)
    : dim_(dimension),
      sweep_(std::move(sweep)),
      timeout_(timeout),
      child_(std::make_unique<ChildProcess>(command)) {
  if (dim_ == 0) throw Error(ErrorKind::Config, "external evaluator needs D >= 1");
}

ResponseCurve ExternalEvaluator::evaluate(const DesignVector& x) {
  std::lock_guard lock(mutex_);
  if (broken_) throw Error(ErrorKind::ProcessExited, *broken_);
  if (x.size() != dim_)
    throw Error(ErrorKind::Dimension,
                fmt::format("external evaluator is {}-dimensional, got {}", dim_, x.size()));
  const std::uint64_t id = next_id_++;
  try {
    return external_evaluate(*child_, id, x, sweep_, timeout_);
  } catch (const Error& e) {
    // After these the stream is out of step with our ids.
    if (e.kind() == ErrorKind::Timeout || e.kind() == ErrorKind::ProcessExited ||
        e.kind() == ErrorKind::Io)
      broken_ = std::string("evaluator unusable after earlier failure: ") + e.what();
    throw;
  }
}

std::uint64_t ExternalEvaluator::requests_sent() const {
  std::lock_guard lock(mutex_);
  return next_id_ - 1;
}

int serve_mock(const EvaluatorFactory& factory, std::istream& in, std::ostream& out,
               std::ostream& err) {
  std::vector<double> last_freq;
  std::unique_ptr<Evaluator> ev;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::optional<std::uint64_t> id;
    ProtocolResponse resp;
    try {
      const ProtocolRequest req = decode_request(line, &id);
      resp.id = req.id;
      if (!ev || req.freq != last_freq) {
        const double lo = req.freq.front();
        const double hi = req.freq.back();
        ev = factory(FrequencySweep(req.freq, lo, hi > lo ? hi : lo + 1.0));
        last_freq = req.freq;
      }
      resp.r_db = ev->evaluate(DesignVector(req.x)).r_db;
    } catch (const std::exception& e) {
      if (!id) {
        err << "serve-mock: dropping unparseable request: " << e.what() << '\n';
        err.flush();
        continue;
      }
      resp.id = *id;
      resp.r_db.reset();
      resp.error = e.what();
    }
    out << encode_response(resp) << '\n';
    out.flush();
  }
  return 0;
}

}  // namespace fdtr
