// xorflow: back-pressure simulator for pairwise XOR coding across multiple
// unicasts, with solution extraction, verification, and a desk-scale
// feasibility oracle.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "xorflow/engine.hpp"
#include "xorflow/gen.hpp"
#include "xorflow/oracle.hpp"
#include "xorflow/solution.hpp"

namespace fs = std::filesystem;
using namespace xorflow;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

struct RunFlags {
  std::string instance_path;
  std::string out_dir = ".";
  RoundConfig cfg;
};

int cmd_run(const RunFlags& flags) {
  ProblemInstance inst = parse_instance(slurp(flags.instance_path));
  DerivedConstants consts =
      derive_constants(inst, flags.cfg.epsilon, flags.cfg.L, flags.cfg.F, flags.cfg.kappa);
  CatalogOptions copts;
  copts.routing_only = flags.cfg.routing_only;
  copts.prune_tags = flags.cfg.prune_tags;
  Layout layout = build_layout(inst, consts, copts);
  Engine eng(layout, flags.cfg);
  RunResult res = eng.run();

  fs::create_directories(flags.out_dir);
  spit(fs::path(flags.out_dir) / "rounds.csv", stats_csv(layout, res.stats));
  spit(fs::path(flags.out_dir) / "solution.json", res.solution.to_json_text(inst));

  nlohmann::json rep;
  rep["converged"] = res.converged;
  rep["rounds"] = res.rounds;
  rep["entered"] = res.entered;
  rep["remaining"] = res.remaining;
  rep["epsilon"] = flags.cfg.epsilon;
  rep["stop_fraction"] =
      flags.cfg.stop_fraction < 0 ? flags.cfg.epsilon : flags.cfg.stop_fraction;
  rep["fast_index"] = flags.cfg.fast_index;
  rep["routing_only"] = flags.cfg.routing_only;
  nlohmann::json rates = nlohmann::json::object();
  nlohmann::json demanded = nlohmann::json::object();
  for (int c = 0; c < inst.num_sessions(); ++c) {
    rates[std::to_string(c + 1)] = res.solution.rates.empty() ? 0.0 : res.solution.rates[c];
    demanded[std::to_string(c + 1)] = inst.sessions[c].rate;
  }
  rep["achieved_rates"] = rates;
  rep["demanded_rates"] = demanded;
  spit(fs::path(flags.out_dir) / "report.json", rep.dump(2) + "\n");

  if (!res.converged) {
    std::cerr << "not converged after " << res.rounds << " rounds (remaining " << res.remaining
              << " of " << res.entered << " entered)\n";
    return 3;
  }
  std::cout << "converged in " << res.rounds << " rounds\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"back-pressure XOR-coding simulator for multiple unicasts"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a bundled example instance");
  std::string gen_name, gen_out;
  double gen_rate = -1.0;
  int gen_nodes = 0, gen_sessions = 0;
  std::uint64_t gen_seed = 1;
  bool gen_wireless = false;
  gen->add_option("name", gen_name, "line | two-unicast-poison | reverse-carpool | random")
      ->required();
  gen->add_option("--rate", gen_rate, "session rate (fixture default if omitted)");
  gen->add_option("--nodes", gen_nodes, "node count (line, random)");
  gen->add_option("--sessions", gen_sessions, "session count (random)");
  gen->add_option("--seed", gen_seed, "rng seed (random)");
  gen->add_flag("--wireless", gen_wireless, "wireless mode (random)");
  gen->add_option("--out", gen_out, "output file (default <name>.json)");

  // run
  auto* run = app.add_subcommand("run", "simulate and extract the averaged solution");
  RunFlags rf;
  bool no_fast_index = false;
  run->add_option("instance", rf.instance_path, "instance file")->required();
  run->add_option("--epsilon", rf.cfg.epsilon, "approximation parameter in (0, 1/2)");
  run->add_option("--big-l", rf.cfg.L, "longest-primary-path bound (default N-1)");
  run->add_option("--big-f", rf.cfg.F, "max links per elementary flow (default 4(N-1))");
  run->add_option("--kappa", rf.cfg.kappa, "alpha reduction factor in (0, 1]");
  run->add_option("--max-rounds", rf.cfg.max_rounds, "round cap");
  run->add_option("--stop-fraction", rf.cfg.stop_fraction,
                  "terminate when remaining/entered <= this (default epsilon)");
  run->add_flag("--no-fast-index", no_fast_index, "use the scan kernels instead of the index");
  run->add_flag("--routing-only", rf.cfg.routing_only, "disable coding (baseline)");
  run->add_flag("--prune-tags", rf.cfg.prune_tags,
                "restrict uncoded tags to nodes on session paths");
  run->add_option("--kernel", rf.cfg.kernel, "scan kernel: auto | scalar | avx2");
  run->add_option("--stats-stride", rf.cfg.stats_stride, "record every n-th round in rounds.csv");
  run->add_option("--out", rf.out_dir, "output directory");

  // verify
  auto* ver = app.add_subcommand("verify", "check a solution against the constraint system");
  std::string ver_instance, ver_solution, ver_out = ".";
  double ver_tol = -1.0, ver_eps = 0.1;
  ver->add_option("instance", ver_instance, "instance file")->required();
  ver->add_option("solution", ver_solution, "solution.json to check")->required();
  ver->add_option("--tolerance", ver_tol, "residual tolerance (default epsilon * min rate)");
  ver->add_option("--epsilon", ver_eps, "epsilon used for the default tolerance");
  ver->add_option("--out", ver_out, "output directory");

  // oracle
  auto* ora = app.add_subcommand("oracle", "grid-search feasibility on a tiny instance");
  std::string ora_instance;
  OracleOptions oopts;
  std::vector<double> ora_rates;
  ora->add_option("instance", ora_instance, "instance file")->required();
  ora->add_option("--grid", oopts.grid, "discretization step");
  ora->add_flag("--routing-only", oopts.routing_only, "forbid coding variables");
  ora->add_option("--max-states", oopts.max_states, "search state cap");
  ora->add_option("--rates", ora_rates, "override demanded rates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      double rate = gen_rate;
      if (rate <= 0) rate = gen_name == "reverse-carpool" ? 0.3 : gen_name == "line" ? 0.5 : 0.8;
      ProblemInstance inst = gen_by_name(gen_name, rate, gen_nodes, gen_sessions, gen_seed,
                                         gen_wireless ? Mode::Wireless : Mode::Wired);
      std::string out = gen_out.empty() ? gen_name + ".json" : gen_out;
      spit(out, inst.to_json_text());
      std::cout << out << "\n";
      return 0;
    }
    if (*run) {
      rf.cfg.fast_index = !no_fast_index;
      return cmd_run(rf);
    }
    if (*ver) {
      ProblemInstance inst = parse_instance(slurp(ver_instance));
      SolutionVariables sol = SolutionVariables::from_json_text(inst, slurp(ver_solution));
      std::vector<double> rates;
      double rmin = 0.0;
      for (const Session& s : inst.sessions) {
        rates.push_back(s.rate);
        rmin = rmin == 0.0 ? s.rate : std::min(rmin, s.rate);
      }
      const double tol = ver_tol > 0 ? ver_tol : ver_eps * rmin;
      VerificationReport rep = verify(inst, sol, rates, tol);
      fs::create_directories(ver_out);
      spit(fs::path(ver_out) / "verification.json", rep.to_json_text(inst));
      std::cout << (rep.pass ? "pass" : "fail") << " (max residual " << rep.max_abs_residual
                << ", tolerance " << tol << ")\n";
      return rep.pass ? 0 : 1;
    }
    if (*ora) {
      ProblemInstance inst = parse_instance(slurp(ora_instance));
      std::vector<double> rates;
      for (const Session& s : inst.sessions) rates.push_back(s.rate);
      if (!ora_rates.empty()) {
        if (ora_rates.size() != rates.size()) throw ConfigError("--rates size mismatch");
        rates = ora_rates;
      }
      OracleOutcome out = oracle_search(inst, rates, oopts);
      std::cout << (out.feasible ? "feasible" : "infeasible-at-grid") << " (" << out.states
                << " states)\n";
      return out.feasible ? 0 : 1;
    }
  } catch (const OracleRefusal& e) {
    std::cerr << "oracle refused: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
