#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "xorflow/gen.hpp"
#include "xorflow/netmodel.hpp"

using namespace xorflow;

namespace {

const char* kLine3 = R"({
  "mode": "wired",
  "nodes": ["a", "b", "c"],
  "links": [{"from": "a", "to": "b", "cap": 5.0}, {"from": "b", "to": "c", "cap": 5.0}],
  "sessions": [{"src": "a", "dst": "c", "rate": 1.0}]
})";

}  // namespace

TEST_SUITE("netmodel") {

TEST_CASE("capacity capping at max session rate") {
  ProblemInstance inst = parse_instance(kLine3);
  REQUIRE(inst.wired_links.size() == 2);
  CHECK(inst.wired_links[0].cap == doctest::Approx(1.0));
  CHECK(inst.wired_links[1].cap == doctest::Approx(1.0));
}

TEST_CASE("capping is idempotent") {
  ProblemInstance once = parse_instance(kLine3);
  ProblemInstance twice = parse_instance(once.to_json_text());
  for (size_t i = 0; i < once.wired_links.size(); ++i)
    CHECK(once.wired_links[i].cap == twice.wired_links[i].cap);
}

TEST_CASE("degenerate session rejected") {
  CHECK_THROWS_AS(parse_instance(R"({"mode":"wired","nodes":["a"],"links":[],
      "sessions":[{"src":"a","dst":"a","rate":1.0}]})"),
                  ParseError);
}

TEST_CASE("nonpositive rate rejected") {
  CHECK_THROWS_AS(parse_instance(R"({"mode":"wired","nodes":["a","b"],
      "links":[{"from":"a","to":"b","cap":1.0}],
      "sessions":[{"src":"a","dst":"b","rate":0.0}]})"),
                  ParseError);
}

TEST_CASE("dangling node reference rejected") {
  CHECK_THROWS_AS(parse_instance(R"({"mode":"wired","nodes":["a","b"],
      "links":[{"from":"a","to":"z","cap":1.0}],
      "sessions":[{"src":"a","dst":"b","rate":1.0}]})"),
                  ParseError);
}

TEST_CASE("unknown keys rejected") {
  CHECK_THROWS_AS(parse_instance(R"({"mode":"wired","nodes":["a","b"],"links":[],
      "sessions":[],"extra":1})"),
                  ParseError);
}

TEST_CASE("wireless instance needs rate sets") {
  CHECK_THROWS_AS(parse_instance(R"({"mode":"wireless","nodes":["a","b"],
      "links":[{"id":"l0","from":"a","dsts":["b"]}],
      "rate_sets":[],
      "sessions":[{"src":"a","dst":"b","rate":0.5}]})"),
                  ParseError);
}

TEST_CASE("wireless relay round-trips with three rate sets") {
  ProblemInstance rc = gen_reverse_carpool(0.3);
  ProblemInstance back = parse_instance(rc.to_json_text());
  CHECK(back.mode == Mode::Wireless);
  CHECK(back.rate_sets.size() == 3);
  CHECK(back.wireless_links.size() == 3);
  CHECK(back.num_sessions() == 2);
}

TEST_CASE("two-unicast fixture shape") {
  ProblemInstance inst = gen_two_unicast_poison(0.8);
  CHECK(inst.num_nodes() == 6);
  CHECK(inst.wired_links.size() == 7);
  CHECK(inst.num_sessions() == 2);
}

TEST_CASE("line fixture with two nodes is a single link") {
  ProblemInstance inst = gen_line(2, 0.5, 1.0);
  CHECK(inst.wired_links.size() == 1);
  CHECK(inst.num_sessions() == 1);
}

TEST_CASE("alpha formula") {
  // eps=0.12, F=5, r=2, kappa=1 -> 0.0005
  ProblemInstance inst = parse_instance(R"({"mode":"wired","nodes":["a","b"],
      "links":[{"from":"a","to":"b","cap":9.0}],
      "sessions":[{"src":"a","dst":"b","rate":2.0}]})");
  DerivedConstants c = derive_constants(inst, 0.12, 3, 5, 1.0);
  CHECK(std::fabs(c.alpha[0] - 0.0005) < 1e-9);
  CHECK(c.packet[0] == doctest::Approx((1 + 0.12) * 2.0).epsilon(1e-12));
}

TEST_CASE("packet size") {
  ProblemInstance inst = parse_instance(R"({"mode":"wired","nodes":["a","b"],
      "links":[{"from":"a","to":"b","cap":1.0}],
      "sessions":[{"src":"a","dst":"b","rate":1.0}]})");
  DerivedConstants c = derive_constants(inst, 0.1, 1, 1, 1.0);
  CHECK(std::fabs(c.packet[0] - 1.1) < 1e-12);
}

TEST_CASE("B r_c formula against independently computed value") {
  // K=2, L=3, eps=0.1, F=5, r=1, kappa=1:
  //   alpha = 1/1200, Br = 1200 ln(120) + 3.3 = 5748.290091338456
  ProblemInstance inst = parse_instance(R"({"mode":"wired","nodes":["a","b","c"],
      "links":[{"from":"a","to":"b","cap":1.0},{"from":"b","to":"c","cap":1.0}],
      "sessions":[{"src":"a","dst":"c","rate":1.0},{"src":"c","dst":"a","rate":1.0}]})");
  DerivedConstants c = derive_constants(inst, 0.1, 3, 5, 1.0);
  CHECK(std::fabs(c.alpha[0] - 1.0 / 1200) < 1e-12);
  CHECK(std::fabs(c.B_times_r[0] - 5748.290091338456) < 1e-9);
}

TEST_CASE("alpha_c r_c constant across sessions") {
  ProblemInstance inst = parse_instance(R"({"mode":"wired","nodes":["a","b","c"],
      "links":[{"from":"a","to":"b","cap":1.0},{"from":"b","to":"c","cap":1.0}],
      "sessions":[{"src":"a","dst":"c","rate":0.25},{"src":"c","dst":"a","rate":0.7},
                  {"src":"b","dst":"c","rate":1.3}]})");
  DerivedConstants c = derive_constants(inst, 0.2, 2, 6, 0.5);
  for (int s = 0; s < 3; ++s)
    CHECK(c.alpha[s] * inst.sessions[s].rate ==
          doctest::Approx(0.5 * 0.2 / (24.0 * 6)).epsilon(1e-12));
  CHECK(c.rho == doctest::Approx(1.3 / 0.25));
}

TEST_CASE("cbar dominates every link capacity") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ProblemInstance inst = gen_random(seed, 5, 2, Mode::Wired);
    DerivedConstants c = derive_constants(inst, 0.1, -1, -1, 1.0);
    for (const WiredLink& l : inst.wired_links) CHECK(c.cbar >= l.cap - 1e-12);
  }
}

TEST_CASE("oversized instances are rejected") {
  std::string nodes = "[";
  for (int i = 0; i < 1001; ++i) nodes += (i ? ",\"x" : "\"x") + std::to_string(i) + "\"";
  nodes += "]";
  CHECK_THROWS_AS(
      parse_instance(R"({"mode":"wired","nodes":)" + nodes + R"(,"links":[],"sessions":[]})"),
      ParseError);
}

TEST_CASE("parameter bounds enforced") {
  ProblemInstance inst = gen_line(2, 0.5, 1.0);
  CHECK_THROWS_AS(derive_constants(inst, 0.5, 1, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(derive_constants(inst, 0.0, 1, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(derive_constants(inst, 0.1, 1, 1, 0.0), ConfigError);
}

}  // TEST_SUITE
