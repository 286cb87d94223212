// Command-line front end: run experiments, compare algorithms, export and
// check weight schemes, audit saved traces.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cabinet/cabinet.hpp"

using namespace cabinet;

namespace {

nlohmann::json load_scenario(const std::string& path) {
  if (path.empty()) return nullptr;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot open scenario '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, "scenario '" + path + "': " + e.what());
  }
}

std::string replication_path(const std::string& out, int rep) {
  if (rep == 0) return out;
  const auto dot = out.rfind('.');
  const std::string suffix = "_rep" + std::to_string(rep);
  return dot == std::string::npos ? out + suffix : out.substr(0, dot) + suffix + out.substr(dot);
}

void add_run_flags(CLI::App* cmd, std::string& scenario, RunFlags& flags) {
  cmd->add_option("--scenario", scenario, "Scenario JSON file");
  cmd->add_option("--algo", flags.algo, "cabinet | baseline");
  cmd->add_option("--n", flags.n, "Cluster size");
  cmd->add_option("--t", flags.t, "Failure threshold: integer or fX%");
  cmd->add_option("--batch", flags.batch, "Operations per round");
  cmd->add_option("--rounds", flags.rounds, "Client rounds to commit");
  cmd->add_option("--seed", flags.seed, "Seed (falls back to CABINET_SEED)");
  cmd->add_option("--delay", flags.delay, "none | d1:<mean> | d2 | d3 | d4");
  cmd->add_option("--crash", flags.crash, "none | <strong|weak|random>:<x>@<round>[/<stagger>]");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted-consensus simulator and experiment harness"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, trace_path;
  RunFlags flags;
  int replications = 1;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment and write per-round metrics");
  add_run_flags(run_cmd, scenario_path, flags);
  run_cmd->add_option("--out", out_path, "CSV output path (stdout if omitted)");
  run_cmd->add_option("--trace", trace_path, "Write the execution trace as JSON lines");
  run_cmd->add_option("--replications", replications, "Seeds seed..seed+k-1")->check(CLI::PositiveNumber);

  auto* cmp_cmd = app.add_subcommand("compare", "Paired cabinet vs. baseline run on the same seed");
  add_run_flags(cmp_cmd, scenario_path, flags);
  cmp_cmd->add_option("--out", out_path, "Summary CSV path (stdout if omitted)");

  int n = 0, t = 0;
  auto* scheme_cmd = app.add_subcommand("scheme", "Print the generated weight scheme as JSON");
  scheme_cmd->add_option("--n", n)->required();
  scheme_cmd->add_option("--t", t)->required();

  std::vector<double> weights;
  double ct = 0.0;
  auto* verify_cmd = app.add_subcommand("verify-scheme", "Check an explicit weight list");
  verify_cmd->add_option("--weights", weights)->required()->delimiter(',');
  verify_cmd->add_option("--ct", ct)->required();
  verify_cmd->add_option("--t", t)->required();

  std::string audit_path;
  auto* audit_cmd = app.add_subcommand("audit", "Audit a saved trace");
  audit_cmd->add_option("trace", audit_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const nlohmann::json doc = load_scenario(scenario_path);
      Scenario sc = build_scenario(doc, flags);
      int worst = kExitOk;
      for (int rep = 0; rep < replications; ++rep) {
        Scenario cell = sc;
        cell.seed = sc.seed + static_cast<std::uint64_t>(rep);
        const ExperimentResult r = run_experiment(cell);
        if (out_path.empty()) {
          write_csv(std::cout, r.rows, r.summary);
        } else {
          std::ofstream out(replication_path(out_path, rep));
          write_csv(out, r.rows, r.summary);
        }
        if (!trace_path.empty()) {
          std::ofstream out(replication_path(trace_path, rep));
          write_jsonl(out, r.sim.trace);
        }
        if (!r.violations.empty()) std::cerr << to_json(r.violations).dump(2) << '\n';
        if (r.exit_code == kExitLivelock) std::cerr << "livelock_detected: no commit within the time cap\n";
        worst = std::max(worst, r.exit_code);
      }
      return worst;
    }
    if (*cmp_cmd) {
      const Scenario sc = build_scenario(load_scenario(scenario_path), flags);
      const PairedComparison cmp = paired_compare(sc);
      if (out_path.empty()) {
        write_comparison(std::cout, cmp);
      } else {
        std::ofstream out(out_path);
        write_comparison(out, cmp);
      }
      return std::max(cmp.cabinet.exit_code, cmp.baseline.exit_code);
    }
    if (*scheme_cmd) {
      std::cout << to_json(generate_scheme(n, t)).dump(2) << '\n';
      return kExitOk;
    }
    if (*verify_cmd) {
      const SchemeVerdict v = validate_scheme(weights, ct, t);
      nlohmann::ordered_json j;
      j["valid"] = v.valid;
      j["violated"] = std::string(to_string(v.violated));
      j["margins"] = {v.margins.first, v.margins.second};
      if (weights.size() <= kExhaustiveMaxNodes) {
        const ExhaustiveReport rep = exhaustive_scheme_check(weights, ct, t);
        j["exhaustive"] = {{"n_minus_t_quorums", rep.n_minus_t_quorums},
                           {"non_cabinet_below", rep.non_cabinet_below},
                           {"no_disjoint_quorums", rep.no_disjoint_quorums},
                           {"light_quorum", rep.light_quorum},
                           {"disjoint_a", rep.disjoint_a},
                           {"disjoint_b", rep.disjoint_b},
                           {"min_fatal_crashes", rep.min_fatal_crashes}};
      }
      std::cout << j.dump(2) << '\n';
      return v.valid ? kExitOk : 1;
    }
    if (*audit_cmd) {
      std::ifstream in(audit_path);
      if (!in) throw Error(ErrorCode::config_error, "cannot open trace '" + audit_path + "'");
      const auto violations = audit_trace(read_jsonl(in));
      std::cout << to_json(violations).dump(2) << '\n';
      return violations.empty() ? kExitOk : kExitAuditFailed;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitOk;
}
