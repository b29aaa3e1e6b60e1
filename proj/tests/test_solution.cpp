#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "xorflow/engine.hpp"
#include "xorflow/gen.hpp"
#include "xorflow/solution.hpp"

using namespace xorflow;
using namespace xorflow::test;

namespace {

Layout layout_for(const ProblemInstance& inst) {
  return build_layout(inst, derive_constants(inst, 0.1, -1, -1, 1.0), false);
}

ProblemInstance two_node(double rate, double cap) {
  return parse_instance(R"({"mode":"wired","nodes":["A","B"],
      "links":[{"from":"A","to":"B","cap":)" +
                        std::to_string(cap) + R"(}],
      "sessions":[{"src":"A","dst":"B","rate":)" +
                        std::to_string(rate) + "}]}");
}

int pair_index(const Layout& lay, int li, PairForm form, const QueueId& origin) {
  for (int pi = 0; pi < (int)lay.catalogs[li].pairs.size(); ++pi) {
    const TransferPair& p = lay.catalogs[li].pairs[pi];
    if (p.form == form && p.origins[0] == origin) return pi;
  }
  return -1;
}

}  // namespace

TEST_SUITE("solution") {

TEST_CASE("average_flows maps pushes to families and divides by rounds") {
  ProblemInstance inst = gen_line(2, 1.0, 1.0);
  Layout lay = layout_for(inst);
  std::vector<std::vector<double>> cum(lay.links.size());
  for (size_t li = 0; li < lay.links.size(); ++li)
    cum[li].assign(lay.catalogs[li].pairs.size(), 0.0);

  int li = -1;
  for (int i = 0; i < (int)lay.links.size(); ++i)
    if (lay.links[i].kind == LinkKind::WiredReal) li = i;
  const int pi = pair_index(lay, li, PairForm::UncodedKeep, QueueId::uncoded(0, 0, 0));
  REQUIRE(pi >= 0);

  cum[li][pi] = 0.5;
  SolutionVariables one = average_flows(lay, cum, 1, {0.5});
  CHECK(one.nu.at(LinkVarKey{0, 1, 0, -1, 0}) == doctest::Approx(0.5));

  cum[li][pi] = 1.0;  // 1.0 then 0 over two rounds
  SolutionVariables two = average_flows(lay, cum, 2, {0.5});
  CHECK(two.nu.at(LinkVarKey{0, 1, 0, -1, 0}) == doctest::Approx(0.5));

  CHECK_THROWS_AS(average_flows(lay, cum, 0, {}), ConfigError);
}

TEST_CASE("reversed joint poison exports in forward orientation") {
  ProblemInstance inst = gen_two_unicast_poison(1.0);
  Layout lay = layout_for(inst);
  const int a = inst.node_index("a"), b = inst.node_index("b");
  int li = -1;
  for (int i = 0; i < (int)lay.links.size(); ++i)
    if (lay.links[i].kind == LinkKind::WiredReal && lay.links[i].a == a && lay.links[i].b == b)
      li = i;
  REQUIRE(li >= 0);
  const int pi = pair_index(lay, li, PairForm::JointPoisonRev, QueueId::joint_poison(b, 0, 1, a));
  REQUIRE(pi >= 0);

  std::vector<std::vector<double>> cum(lay.links.size());
  for (size_t l = 0; l < lay.links.size(); ++l) cum[l].assign(lay.catalogs[l].pairs.size(), 0.0);
  cum[li][pi] = 1.0;
  SolutionVariables sol = average_flows(lay, cum, 1, {0, 0});
  CHECK(sol.pi_joint.at(LinkVarKey{a, b, 0, 1, a}) == doctest::Approx(1.0));
}

TEST_CASE("verify accepts a hand-built routing solution and flags a perturbation") {
  ProblemInstance inst = two_node(0.7, 1.0);
  SolutionVariables sol;
  sol.rates = {0.7};
  sol.nu[LinkVarKey{0, 1, 0, -1, 0}] = 0.7;
  VerificationReport ok = verify(inst, sol, {0.7}, 1e-9);
  CHECK(ok.pass);
  CHECK(ok.max_abs_residual < 1e-12);

  sol.nu[LinkVarKey{0, 1, 0, -1, 0}] = 0.8;
  VerificationReport bad = verify(inst, sol, {0.7}, 1e-3);
  CHECK_FALSE(bad.pass);
  REQUIRE(!bad.residuals.empty());
  CHECK(bad.residuals[0].value == doctest::Approx(0.1));
  CHECK(bad.residuals[0].node == 0);  // the source row
}

TEST_CASE("a mid-path perturbation shows at both endpoints") {
  // 5-node line with a retag at v1, so the perturbed hop's rows are enforced
  ProblemInstance inst = gen_line(5, 0.5, 1.0);
  SolutionVariables sol;
  sol.rates = {0.5};
  sol.nu_retag[LinkVarKey{0, 1, 0, -1, 0}] = 0.5;  // v0->v1 tag v0
  sol.nu_retag[LinkVarKey{1, 2, 0, -1, 0}] = 0.5;  // v1->v2 tag v0, retag to v1
  sol.nu[LinkVarKey{2, 3, 0, -1, 1}] = 0.5;        // v2->v3 keeping tag v1
  sol.nu[LinkVarKey{3, 4, 0, -1, 1}] = 0.5;        // v3->v4 keeping tag v1
  VerificationReport ok = verify(inst, sol, {0.5}, 1e-9);
  CHECK(ok.pass);

  sol.nu[LinkVarKey{2, 3, 0, -1, 1}] = 0.6;
  VerificationReport bad = verify(inst, sol, {0.5}, 1e-3);
  CHECK_FALSE(bad.pass);
  bool at2 = false, at3 = false;
  for (const ResidualEntry& r : bad.residuals) {
    if (std::fabs(std::fabs(r.value) - 0.1) < 1e-9) {
      at2 |= r.node == 2;
      at3 |= r.node == 3;
    }
  }
  CHECK(at2);
  CHECK(at3);
}

TEST_CASE("hand-built pairwise code on the two-unicast fixture verifies exactly") {
  ProblemInstance inst = gen_two_unicast_poison(1.0);
  SolutionVariables sol = hand_two_unicast_solution(inst, 1.0);
  VerificationReport rep = verify(inst, sol, {1.0, 1.0}, 1e-9);
  CHECK(rep.pass);
  CHECK(rep.max_abs_residual < 1e-12);
  CHECK(rep.min_capacity_slack >= -1e-12);
}

TEST_CASE("mutations of the hand-built code are caught and localized") {
  ProblemInstance inst = gen_two_unicast_poison(1.0);
  int caught = 0, total = 0;
  for (int sign : {+1, -1}) {
    SolutionVariables base = hand_two_unicast_solution(inst, 1.0);
    auto vars = collect_vars(base);
    for (const VarRef& vr : vars) {
      SolutionVariables mutated = hand_two_unicast_solution(inst, 1.0);
      auto mvars = collect_vars(mutated);
      // same ordering as vars: locate by index
      size_t i = &vr - vars.data();
      *mvars[i].val += 0.1 * sign;
      VerificationReport rep = verify(inst, mutated, {1.0, 1.0}, 0.05);
      ++total;
      if (!rep.pass) {
        ++caught;
        if (!rep.residuals.empty()) {
          bool localized = false;
          for (int n : mvars[i].nodes) localized |= rep.residuals[0].node == n;
          CHECK(localized);
        }
      }
    }
  }
  CHECK(total == 22);
  CHECK(caught == total);
}

TEST_CASE("json round-trip is lossless") {
  ProblemInstance inst = gen_two_unicast_poison(1.0);
  SolutionVariables sol = hand_two_unicast_solution(inst, 0.875);
  sol.lambda_avg = {};  // wired
  SolutionVariables back = SolutionVariables::from_json_text(inst, sol.to_json_text(inst));
  CHECK(back.nu == sol.nu);
  CHECK(back.nu_retag == sol.nu_retag);
  CHECK(back.pi_joint == sol.pi_joint);
  CHECK(back.pi_indiv == sol.pi_indiv);
  CHECK(back.rho == sol.rho);
  CHECK(back.gamma == sol.gamma);
  CHECK(back.sigma == sol.sigma);
  CHECK(back.eta == sol.eta);
  CHECK(back.rates == sol.rates);
}

TEST_CASE("solutions referencing unknown tuples are rejected") {
  ProblemInstance inst = gen_line(2, 0.5, 1.0);
  CHECK_THROWS_AS(SolutionVariables::from_json_text(
                      inst, R"({"nu":[{"a":"zz","b":"v1","c":1,"v":"v0","val":0.5}]})"),
                  ParseError);
  CHECK_THROWS_AS(SolutionVariables::from_json_text(
                      inst, R"({"nu":[{"a":"v0","b":"v1","c":7,"v":"v0","val":0.5}]})"),
                  ParseError);
}

TEST_CASE("run output verifies within the epsilon tolerance") {
  ProblemInstance inst = gen_line(2, 1.0, 1.0);
  RoundConfig cfg;
  cfg.L = 1;
  cfg.F = 1;
  cfg.stats_stride = 1 << 20;
  RunResult r = run(inst, cfg);
  REQUIRE(r.converged);
  VerificationReport rep = verify(inst, r.solution, {1.0}, 0.1 * 1.0);
  CHECK(rep.pass);
  for (const auto& [k, v] : r.solution.nu) CHECK(v >= 0.0);
}

}  // TEST_SUITE
