#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcfcl/data.hpp"
#include "dcfcl/game.hpp"
#include "dcfcl/metrics.hpp"
#include "dcfcl/model.hpp"

namespace dcfcl {

enum class Strategy { kDcfcl, kLocal, kGlobalAvg, kStatic };
enum class Cadence { kEveryRound, kEveryTask };

const char* to_string(Strategy s);
const char* to_string(Cadence c);
std::optional<Strategy> parse_strategy(const std::string& s);

struct RunConfig {
  ScenarioConfig scenario;
  Hyperparams hp;
  int rounds = 60;
  Strategy strategy = Strategy::kDcfcl;
  std::uint64_t seed = 0;  // overrides scenario.seed
  bool oracle_checks = false;
  Cadence cadence = Cadence::kEveryRound;
  bool benefit_correlation = true;
  /// Clients' local training runs concurrently; results are identical either way.
  bool parallel_clients = true;

  int rounds_per_task() const { return rounds / scenario.num_tasks; }
  void validate() const;
};

struct RoundRecord {
  int round = 0;
  int task_phase = 0;
  Partition partition;
  std::vector<Coalition> stable_coalitions;
  int traversal_rounds = 0;
  bool converged = true;
  bool recomputed = false;                  // equilibrium searched this round
  std::optional<bool> equilibrium_verified;  // set when oracle checks ran
  std::vector<double> benefits;              // per client, from this round's table
  std::vector<double> accuracy;              // per client, over all seen tasks
  std::int64_t bytes_up = 0;
  std::int64_t bytes_down = 0;
  std::optional<double> benefit_val_spearman;
};

struct RunSummary {
  double average_accuracy = 0.0;
  double average_forgetting = 0.0;
  std::int64_t total_bytes_up = 0;
  std::int64_t total_bytes_down = 0;
  int nonconverged_rounds = 0;
  int oracle_failures = 0;
  int oracle_checked_rounds = 0;
  double mean_spearman = 0.0;  // over rounds where it is defined
  double seconds = 0.0;
};

struct RunResult {
  AccuracyMatrix accuracy;
  std::vector<RoundRecord> rounds;
  RunSummary summary;
  std::vector<Classifier> final_models;
};

/// Every member of S receives sum_{j in S} (n_j / sum n) theta_j.
void aggregate_coalition(Coalition s, std::vector<FlatParams>& models,
                         std::span<const std::int64_t> counts);

RunResult run(const RunConfig& config);
RunResult run(const RunConfig& config, const Scenario& scenario);

// output formats
nlohmann::json round_record_to_json(const RoundRecord& r);
nlohmann::json summary_to_json(const RunSummary& s, const RunConfig& config);
/// Header: client,learned_through,eval_task,accuracy,n
std::string accuracy_csv(const AccuracyMatrix& m);
/// Writes summary.json, rounds.jsonl and accuracy.csv into dir.
void write_run_outputs(const RunResult& result, const RunConfig& config, const std::string& dir);

}  // namespace dcfcl
