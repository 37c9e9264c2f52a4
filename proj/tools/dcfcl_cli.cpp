// dcfcl: run simulations, replay benefit tables through the game engine and
// check the closed-form benefit against the aggregate-then-cosine definition.
//
// Exit codes: 0 ok, 1 bad input (config, table, flags), 2 runtime failure,
// 3 benefit-check deviation.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>

#include "dcfcl/config.hpp"
#include "dcfcl/instances.hpp"
#include "dcfcl/rng.hpp"
#include "dcfcl/serialize.hpp"
#include "dcfcl/simulator.hpp"

namespace {

using namespace dcfcl;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitDeviation = 3;

std::string join_coalitions(const std::vector<Coalition>& cs) {
  std::string out;
  for (std::size_t i = 0; i < cs.size(); ++i) out += (i ? " " : "") + cs[i].to_string();
  return out.empty() ? "(none)" : out;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::string> out;
};

int cmd_run(const RunArgs& a) {
  CliConfig cfg;
  try {
    cfg = load_cli_config(a.config);
    if (a.seed) {
      cfg.run.seed = *a.seed;
      cfg.run.scenario.seed = *a.seed;
    }
    if (a.strategy) {
      const auto s = parse_strategy(*a.strategy);
      if (!s) throw ConfigError("unknown strategy '" + *a.strategy + "'");
      cfg.run.strategy = *s;
    }
    if (a.out) cfg.output_dir = *a.out;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    const auto result = run(cfg.run);
    write_run_outputs(result, cfg.run, cfg.output_dir);
    if (cfg.verbosity > 0) {
      const auto& s = result.summary;
      std::cout << std::fixed << std::setprecision(4) << "strategy " << to_string(cfg.run.strategy)
                << "  seed " << cfg.run.seed << "\n"
                << "average accuracy   " << s.average_accuracy << "\n"
                << "average forgetting " << s.average_forgetting << "\n"
                << "bytes up/down      " << s.total_bytes_up << " / " << s.total_bytes_down << "\n"
                << "final partition    " << result.rounds.back().partition.to_string() << "\n"
                << "outputs in " << cfg.output_dir << "\n";
    }
    if (cfg.verbosity > 1) {
      for (const auto& r : result.rounds) {
        std::cout << "round " << r.round << " phase " << r.task_phase << " " << r.partition.to_string()
                  << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_equilibrium(const std::string& path, bool oracle) {
  BenefitTable table;
  try {
    table = load_table(path);
  } catch (const FormatError& e) {
    std::cerr << "invalid table: " << e.what() << "\n";
    return kExitInput;
  }
  const int k = table.num_clients();
  if (oracle && k > kOracleMaxClients) {
    std::cerr << "--oracle supports at most " << kOracleMaxClients << " clients\n";
    return kExitInput;
  }
  if (oracle && !table.is_complete()) {
    std::cerr << "--oracle needs every coalition in the table\n";
    return kExitInput;
  }

  const auto all = table.coalitions();
  const auto r = merge_blocking(table, Partition::singletons(k), all);
  std::cout << "partition " << r.partition.to_string() << "\n"
            << "stable coalitions " << join_coalitions(r.stable_coalitions) << "\n"
            << "passes " << r.traversal_rounds << "\n"
            << "transitions " << r.transitions << "\n"
            << "converged " << (r.converged ? "yes" : "no") << "\n";
  if (oracle) {
    const auto eq = brute_force_equilibria(table, k);
    std::cout << "oracle equilibria " << eq.size() << "\n";
    for (const auto& p : eq) std::cout << "  " << p.to_string() << "\n";
    const bool member = std::find(eq.begin(), eq.end(), r.partition) != eq.end();
    std::cout << (r.converged && member ? "AGREE" : "DISAGREE") << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenefitCheckArgs {
  int k = 4;
  int dim = 8;
  int trials = 100;
  std::uint64_t seed = 0;
  std::optional<double> epsilon;
};

json dump_instance(const std::vector<ClientSnapshot>& snaps, double eps, int i, Coalition s, double closed,
                   double direct) {
  json clients = json::array();
  for (const auto& c : snaps) {
    clients.push_back({{"theta", c.theta.values}, {"grad", c.grad.values}, {"samples", c.samples}});
  }
  return {{"epsilon", eps}, {"client", i}, {"coalition", s.members()}, {"closed", closed},
          {"direct", direct}, {"clients", std::move(clients)}};
}

int cmd_benefit_check(const BenefitCheckArgs& a) {
  if (a.k < 1 || a.k > 10 || a.dim < 1 || a.trials < 0) {
    std::cerr << "benefit-check needs 1 <= k <= 10, dim >= 1 and trials >= 0\n";
    return kExitInput;
  }
  const double eps_cycle[] = {0.0, 0.2, 1.0};
  double worst = 0.0;
  json worst_dump;
  const auto coalitions = all_coalitions(a.k);
  for (int trial = 0; trial < a.trials; ++trial) {
    const double eps = a.epsilon ? *a.epsilon : eps_cycle[trial % 3];
    const auto snaps = random_snapshots(a.k, a.dim, derive_seed(a.seed, {static_cast<std::uint64_t>(trial)}));
    const auto graph = build_affinity_graph(snaps, eps);
    for (Coalition s : coalitions) {
      for (int i : s.members()) {
        const double closed = coalition_benefit_closed(i, s, graph);
        const double direct = coalition_benefit_direct(i, s, snaps, eps);
        const double dev = std::abs(closed - direct);
        if (dev > worst || std::isnan(dev)) {
          worst = std::isnan(dev) ? INFINITY : dev;
          worst_dump = dump_instance(snaps, eps, i, s, closed, direct);
        }
      }
    }
  }
  std::cout << "trials " << a.trials << "\n"
            << "max deviation " << std::scientific << std::setprecision(3) << worst << "\n";
  if (worst >= 1e-9) {
    std::cout << "offending instance " << worst_dump.dump() << "\n";
    return kExitDeviation;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenTableArgs {
  std::string kind = "affinity";
  int k = 4;
  int dim = 8;
  double epsilon = 0.8;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen_table(const GenTableArgs& a) {
  if (a.k < 1 || a.k > BenefitTable::kMaxTableClients) {
    std::cerr << "--k must be in [1, " << BenefitTable::kMaxTableClients << "]\n";
    return kExitInput;
  }
  BenefitTable t;
  if (a.kind == "affinity") {
    t = random_affinity_table(a.k, a.dim, a.epsilon, a.seed);
  } else if (a.kind == "uniform") {
    t = random_uniform_table(a.k, a.seed);
  } else if (a.kind == "zero") {
    t = zero_table(a.k);
  } else if (a.kind == "grand") {
    t = grand_dominant_table(a.k);
  } else if (a.kind == "three") {
    t = three_client_transition_table();
  } else {
    std::cerr << "unknown table kind '" << a.kind << "'\n";
    return kExitInput;
  }
  const auto doc = table_to_json(t);
  if (a.out.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    save_json(doc, a.out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized federated continual learning simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run a simulation from a JSON config");
  run_cmd->add_option("--config", run_args.config, "Config file")->required();
  run_cmd->add_option("--seed", run_args.seed, "Override the config seed");
  run_cmd->add_option("--strategy", run_args.strategy, "dcfcl, local, global_avg or static");
  run_cmd->add_option("--out", run_args.out, "Output directory");

  std::string table_path;
  bool oracle = false;
  auto* eq_cmd = app.add_subcommand("equilibrium", "Run merge-blocking on a benefit table");
  eq_cmd->add_option("--table", table_path, "Benefit table JSON")->required();
  eq_cmd->add_flag("--oracle", oracle, "Cross-check against exhaustive search (K <= 8)");

  BenefitCheckArgs bc;
  auto* bc_cmd = app.add_subcommand("benefit-check", "Closed-form vs direct benefit on random instances");
  bc_cmd->add_option("--k", bc.k, "Clients per instance");
  bc_cmd->add_option("--dim", bc.dim, "Vector dimension");
  bc_cmd->add_option("--trials", bc.trials, "Number of instances");
  bc_cmd->add_option("--seed", bc.seed, "Seed");
  bc_cmd->add_option("--epsilon", bc.epsilon, "Model-similarity weight (default cycles 0, 0.2, 1)");

  GenTableArgs gt;
  auto* gt_cmd = app.add_subcommand("gen-table", "Write a benefit table");
  gt_cmd->add_option("--kind", gt.kind, "affinity, uniform, zero, grand or three");
  gt_cmd->add_option("--k", gt.k, "Clients");
  gt_cmd->add_option("--dim", gt.dim, "Vector dimension for affinity tables");
  gt_cmd->add_option("--epsilon", gt.epsilon, "Model-similarity weight for affinity tables");
  gt_cmd->add_option("--seed", gt.seed, "Seed");
  gt_cmd->add_option("--out", gt.out, "Output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (*run_cmd) return cmd_run(run_args);
  if (*eq_cmd) return cmd_equilibrium(table_path, oracle);
  if (*bc_cmd) return cmd_benefit_check(bc);
  if (*gt_cmd) return cmd_gen_table(gt);
  return kExitInput;
}
