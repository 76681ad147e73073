#include <chrono>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fdtr/adapter.hpp"
#include "fdtr/problems.hpp"
#include "fdtr/trustloop.hpp"
#include "helpers.hpp"

using namespace fdtr;
using namespace std::chrono_literals;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an fdtr::Error");
  return ErrorKind::Io;
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

// Fake server: answers every request line with `reply`.
std::string replying(const std::string& reply) {
  return "while read line; do echo '" + reply + "'; done";
}

EvaluatorFactory quadratic_factory() {
  return [](const FrequencySweep& s) -> std::unique_ptr<Evaluator> {
    return std::make_unique<QuadraticBowl>(fixtures::quadratic_center(), s);
  };
}

const std::string kMockCommand = std::string(FDTR_CLI_PATH) + " serve-mock --problem quadratic";

}  // namespace

TEST_SUITE("adapter") {

TEST_CASE("request encoding round-trips doubles exactly") {
  ProtocolRequest req;
  req.id = 42;
  req.x = {0.1, 1.0 / 3.0, 17.5, -2e-300, 6.02214076e23};
  req.freq = {4.0, 5.015, std::nextafter(6.0, 7.0)};
  const std::string line = encode_request(req);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(line.rfind("{\"id\":42,\"x\":[", 0) == 0);
  const auto back = decode_request(line);
  CHECK(back.id == 42);
  CHECK(back.x == req.x);
  CHECK(back.freq == req.freq);
}

TEST_CASE("response encoding") {
  ProtocolResponse ok;
  ok.id = 3;
  ok.r_db = std::vector<double>{-10.5, 0.1};
  const auto a = decode_response(encode_response(ok));
  CHECK(a.id == 3);
  CHECK(*a.r_db == *ok.r_db);
  CHECK_FALSE(a.error);

  ProtocolResponse bad;
  bad.id = 4;
  bad.error = "mesh \"failed\"";
  const auto b = decode_response(encode_response(bad));
  CHECK(*b.error == "mesh \"failed\"");
  CHECK_FALSE(b.r_db);

  const auto n = decode_response(R"({"id":1,"r_db":[1.0,null]})");
  CHECK(std::isnan((*n.r_db)[1]));
}

TEST_CASE("malformed lines are protocol errors") {
  for (const char* line : {"", "not json", "[1,2]", R"({"x":[1]})", R"({"id":1})",
                           R"({"id":1,"r_db":[1],"error":"both"})", R"({"id":-1,"r_db":[1]})",
                           R"({"id":1,"r_db":"abc"})"}) {
    CAPTURE(line);
    CHECK(kind_of([&] { decode_response(line); }) == ErrorKind::Protocol);
  }
  std::optional<std::uint64_t> id;
  CHECK(kind_of([&] { decode_request(R"({"id":9,"x":"oops","freq":[5]})", &id); }) ==
        ErrorKind::Protocol);
  CHECK(id == 9u);
  id.reset();
  CHECK(kind_of([&] { decode_request("{{{", &id); }) == ErrorKind::Protocol);
  CHECK_FALSE(id);
  CHECK(kind_of([&] { decode_request(R"({"id":1,"x":[],"freq":[5]})"); }) == ErrorKind::Protocol);
}

TEST_CASE("serve_mock answers in order and exits on EOF") {
  const auto sweep = test::in_band_sweep(3);
  std::stringstream in, out, err;
  for (std::uint64_t i = 1; i <= 1000; ++i) {
    ProtocolRequest req{i, {20.0 + 0.001 * static_cast<double>(i), 12, 3.9, 0.3, 10.5, 9.8},
                        {5.0, 5.5, 6.0}};
    in << encode_request(req) << '\n';
  }
  CHECK(serve_mock(quadratic_factory(), in, out, err) == 0);
  QuadraticBowl direct(fixtures::quadratic_center(), sweep);
  std::string line;
  std::uint64_t expected = 1;
  while (std::getline(out, line)) {
    const auto resp = decode_response(line);
    REQUIRE(resp.id == expected);
    const DesignVector x{20.0 + 0.001 * static_cast<double>(expected), 12, 3.9, 0.3, 10.5, 9.8};
    CHECK(*resp.r_db == direct.evaluate(x).r_db);
    ++expected;
  }
  CHECK(expected == 1001);
  CHECK(err.str().empty());
}

TEST_CASE("serve_mock reports bad requests") {
  std::stringstream in, out, err;
  in << R"({"id":5,"x":[1,2],"freq":[5.0]})" << '\n'  // wrong dimension
     << "garbage" << '\n'
     << R"({"id":6,"x":[20.5,12,3.9,0.3,10.5,9.8],"freq":[5.0]})" << '\n';
  CHECK(serve_mock(quadratic_factory(), in, out, err) == 0);
  std::string l1, l2, l3;
  std::getline(out, l1);
  std::getline(out, l2);
  CHECK_FALSE(std::getline(out, l3));
  const auto r1 = decode_response(l1);
  CHECK(r1.id == 5);
  CHECK(r1.error);
  const auto r2 = decode_response(l2);
  CHECK(r2.id == 6);
  CHECK((*r2.r_db)[0] == 0.0);
  CHECK(err.str().find("unparseable") != std::string::npos);
}

TEST_CASE("external evaluator over the CLI mock matches direct evaluation") {
  const auto sweep = FrequencySweep::default_sweep();
  ExternalEvaluator ext(kMockCommand, 6, sweep, 10s);
  QuadraticBowl direct(fixtures::quadratic_center(), sweep);
  const auto x = fixtures::find_design("x7")->x;
  const DesignVector xv(std::vector<double>(x.begin(), x.end()));
  CHECK(ext.evaluate(xv).r_db == direct.evaluate(xv).r_db);
  CHECK(ext.evaluate(xv).r_db == direct.evaluate(xv).r_db);
  CHECK(ext.requests_sent() == 2);  // no caching in the adapter
  CHECK_THROWS_AS(ext.evaluate(DesignVector{1.0}), Error);
}

TEST_CASE("optimize through the adapter matches the in-process run") {
  const auto sweep = test::in_band_sweep(1);
  ExternalEvaluator ext(kMockCommand, 6, sweep, 10s);
  QuadraticBowl direct(fixtures::quadratic_center(), sweep);
  const auto x = fixtures::find_design("x2")->x;
  const DesignVector x0(std::vector<double>(x.begin(), x.end()));
  const Bounds b = fixtures::antenna_bounds();
  const auto a = optimize(direct, x0, b, TrustConfig{});
  const auto r = optimize(ext, x0, b, TrustConfig{});
  REQUIRE(a.trace.size() == r.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].rho == r.trace[i].rho);
    CHECK(a.trace[i].objective_db == r.trace[i].objective_db);
    CHECK(a.trace[i].candidate == r.trace[i].candidate);
  }
  CHECK(ext.requests_sent() == r.evaluations);
}

TEST_CASE("NaN in a response aborts the run with its trace") {
  // Echo a valid answer for the first 9 requests, then a null sample.
  const std::string script =
      "n=0; while read line; do n=$((n+1)); "
      "if [ $n -ge 10 ]; then echo \"{\\\"id\\\":$n,\\\"r_db\\\":[null]}\"; "
      "else echo \"{\\\"id\\\":$n,\\\"r_db\\\":[-$n]}\"; fi; done";
  ExternalEvaluator ext(script, 2, test::in_band_sweep(1), 10s);
  const auto r = optimize(ext, DesignVector{1.0, 1.0}, Bounds({0.1, 0.1}, {5, 5}), TrustConfig{});
  CHECK(r.failed());
  CHECK(r.error_kind == ErrorKind::Evaluation);
  CHECK(r.evaluations == 9);
  CHECK_FALSE(r.trace.empty());
}

TEST_CASE("wrong length names both lengths") {
  ExternalEvaluator ext(replying(R"({"id":1,"r_db":[1,2]})"), 1, test::in_band_sweep(3), 10s);
  std::string msg;
  try {
    ext.evaluate(DesignVector{1.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Protocol);
    msg = e.what();
  }
  CHECK(msg.find("2 samples") != std::string::npos);
  CHECK(msg.find("expected 3") != std::string::npos);
}

TEST_CASE("id mismatch") {
  ExternalEvaluator ext(replying(R"({"id":7,"r_db":[1]})"), 1, test::in_band_sweep(1), 10s);
  CHECK(kind_of([&] { ext.evaluate(DesignVector{1.0}); }) == ErrorKind::Protocol);
}

TEST_CASE("remote error variant") {
  ExternalEvaluator ext(replying(R"({"id":1,"error":"license expired"})"), 1,
                        test::in_band_sweep(1), 10s);
  const auto msg = error_text([&] { ext.evaluate(DesignVector{1.0}); });
  CHECK(msg.find("license expired") != std::string::npos);
  CHECK(kind_of([&] { ext.evaluate(DesignVector{1.0}); }) == ErrorKind::Protocol);  // id 2 != 1
}

TEST_CASE("timeout") {
  ExternalEvaluator ext("read line; sleep 5", 1, test::in_band_sweep(1), 200ms);
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(kind_of([&] { ext.evaluate(DesignVector{1.0}); }) == ErrorKind::Timeout);
  CHECK(std::chrono::steady_clock::now() - t0 < 3s);
  // The stream is out of step afterwards; later calls fail fast.
  CHECK(kind_of([&] { ext.evaluate(DesignVector{2.0}); }) == ErrorKind::ProcessExited);
}

TEST_CASE("process exit") {
  ExternalEvaluator ext("read line; exit 3", 1, test::in_band_sweep(1), 10s);
  const auto msg = error_text([&] { ext.evaluate(DesignVector{1.0}); });
  CHECK(msg.find("status 3") != std::string::npos);
  CHECK(kind_of([&] { ext.evaluate(DesignVector{1.0}); }) == ErrorKind::ProcessExited);

  ExternalEvaluator gone("exit 0", 1, test::in_band_sweep(1), 10s);
  CHECK(kind_of([&] { gone.evaluate(DesignVector{1.0}); }) == ErrorKind::ProcessExited);
}

TEST_CASE("child process lifecycle") {
  ChildProcess cat("cat");
  cat.write_line("hello");
  CHECK(cat.read_line(2s) == "hello");
  CHECK(cat.close() == 0);
}

}  // TEST_SUITE
