#include "dcfcl/simulator.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dcfcl/affinity.hpp"
#include "dcfcl/config.hpp"
#include "dcfcl/rng.hpp"
#include "dcfcl/serialize.hpp"

namespace dcfcl {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kDcfcl: return "dcfcl";
    case Strategy::kLocal: return "local";
    case Strategy::kGlobalAvg: return "global_avg";
    case Strategy::kStatic: return "static";
  }
  return "?";
}

const char* to_string(Cadence c) { return c == Cadence::kEveryRound ? "round" : "task"; }

std::optional<Strategy> parse_strategy(const std::string& s) {
  for (Strategy v : {Strategy::kDcfcl, Strategy::kLocal, Strategy::kGlobalAvg, Strategy::kStatic}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

void RunConfig::validate() const {
  scenario.validate();
  hp.validate();
  if (rounds < 1) throw std::invalid_argument("rounds must be positive");
  if (rounds % scenario.num_tasks != 0) {
    throw std::invalid_argument("rounds (" + std::to_string(rounds) +
                                ") must be divisible by the task count (" +
                                std::to_string(scenario.num_tasks) + ")");
  }
  if (scenario.num_clients > BenefitTable::kMaxTableClients) {
    throw std::invalid_argument("at most " + std::to_string(BenefitTable::kMaxTableClients) +
                                " clients are supported");
  }
}

void aggregate_coalition(Coalition s, std::vector<FlatParams>& models,
                         std::span<const std::int64_t> counts) {
  if (s.empty()) throw std::invalid_argument("aggregate_coalition: empty coalition");
  if (s.size() == 1) return;
  std::vector<std::span<const double>> views;
  std::vector<std::int64_t> n;
  for (int m : s.members()) {
    views.push_back(models[static_cast<std::size_t>(m)].span());
    n.push_back(counts[static_cast<std::size_t>(m)]);
  }
  FlatParams avg(weighted_average(views, n));
  for (int m : s.members()) models[static_cast<std::size_t>(m)] = avg;
}

namespace {

Batch concat_tests(const ClientTimeline& c, int through) {
  Batch out;
  out.features.cols = c.tasks.front().test.features.cols;
  for (int t = 0; t <= through; ++t) {
    const auto& b = c.tasks[static_cast<std::size_t>(t)].test;
    out.features.data.insert(out.features.data.end(), b.features.data.begin(), b.features.data.end());
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  }
  out.features.rows = out.labels.size();
  return out;
}

}  // namespace

RunResult run(const RunConfig& config, const Scenario& scenario) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const int K = static_cast<int>(scenario.clients.size());
  const int T = config.scenario.num_tasks;
  const int M = scenario.num_classes;
  const int d = scenario.feature_dim;
  const int rpt = config.rounds_per_task();

  RunResult res;
  res.accuracy = AccuracyMatrix(K, T);
  std::vector<Classifier> models(static_cast<std::size_t>(K), Classifier(M, d));
  const auto param_bytes = static_cast<std::int64_t>(models.front().param_count() * sizeof(double));

  std::optional<EquilibriumResult> equilibrium;
  double spearman_sum = 0.0;
  int spearman_rounds = 0;

  for (int r = 0; r < config.rounds; ++r) {
    const int phase = r / rpt;
    const bool phase_start = r % rpt == 0;
    const bool phase_end = r % rpt == rpt - 1;

    std::vector<ClassMask> masks;
    std::vector<std::int64_t> counts;
    for (const auto& c : scenario.clients) {
      masks.push_back(ClassMask::of(M, c.seen_classes(phase)));
      counts.push_back(static_cast<std::int64_t>(c.tasks[static_cast<std::size_t>(phase)].train.size()));
    }

    // (a) local iterations; the teacher is the model the round started from
    std::vector<Classifier> trained(static_cast<std::size_t>(K));
    auto train_one = [&](int k) {
      const auto& c = scenario.clients[static_cast<std::size_t>(k)];
      const Classifier* teacher = r > 0 ? &models[static_cast<std::size_t>(k)] : nullptr;
      trained[static_cast<std::size_t>(k)] =
          local_train(models[static_cast<std::size_t>(k)], teacher, c.tasks[static_cast<std::size_t>(phase)].train,
                      config.hp, derive_seed(config.seed, SeedStream::kLocalTrain, static_cast<std::uint64_t>(k),
                                             static_cast<std::uint64_t>(r)),
                      masks[static_cast<std::size_t>(k)]);
    };
    if (config.parallel_clients) {
#pragma omp parallel for schedule(dynamic)
      for (int k = 0; k < K; ++k) train_one(k);
    } else {
      for (int k = 0; k < K; ++k) train_one(k);
    }

    std::vector<ClientSnapshot> snaps(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      auto& s = snaps[static_cast<std::size_t>(k)];
      s.theta = trained[static_cast<std::size_t>(k)].flatten();
      s.grad = delta(s.theta, models[static_cast<std::size_t>(k)].flatten());
      s.samples = counts[static_cast<std::size_t>(k)];
    }
    const AffinityGraph graph = build_affinity_graph(snaps, config.hp.epsilon);
    const BenefitTable table = build_benefit_table(graph);

    RoundRecord rec;
    rec.round = r;
    rec.task_phase = phase;

    Partition partition;
    switch (config.strategy) {
      case Strategy::kLocal:
        partition = Partition::singletons(K);
        break;
      case Strategy::kGlobalAvg:
        partition = Partition::grand(K);
        break;
      case Strategy::kDcfcl:
      case Strategy::kStatic: {
        const bool recompute = config.strategy == Strategy::kDcfcl
                                   ? (config.cadence == Cadence::kEveryRound || phase_start)
                                   : r == 0;
        if (recompute) {
          equilibrium = dynamic_evolution(r, equilibrium ? &*equilibrium : nullptr, table);
          rec.recomputed = true;
          rec.stable_coalitions = equilibrium->stable_coalitions;
          rec.traversal_rounds = equilibrium->traversal_rounds;
          rec.converged = equilibrium->converged;
          if (!equilibrium->converged) ++res.summary.nonconverged_rounds;
          if (config.oracle_checks) {
            const bool ok = is_equilibrium(CooperativeState::make(equilibrium->partition, table), table);
            rec.equilibrium_verified = ok;
            ++res.summary.oracle_checked_rounds;
            if (!ok) ++res.summary.oracle_failures;
          }
        }
        partition = equilibrium->partition;
        break;
      }
    }
    rec.partition = partition;
    rec.benefits = CooperativeState::make(partition, table).benefits;

    if (config.benefit_correlation && K >= 2) {
      std::vector<double> sim, val;
      for (int k = 0; k < K; ++k) {
        const auto& vset = scenario.clients[static_cast<std::size_t>(k)].tasks[static_cast<std::size_t>(phase)].val;
        if (vset.size() == 0) continue;
        for (int j = 0; j < K; ++j) {
          if (j == k) continue;
          const Coalition pair = Coalition::singleton(k).with(Coalition::singleton(j));
          const FlatParams pair_params[] = {snaps[static_cast<std::size_t>(k)].theta, snaps[static_cast<std::size_t>(j)].theta};
          const std::int64_t pair_counts[] = {counts[static_cast<std::size_t>(k)], counts[static_cast<std::size_t>(j)]};
          const auto merged = Classifier::unflatten(weighted_average(pair_params, pair_counts), M, d);
          sim.push_back(table.at(pair, k));
          val.push_back(-classification_loss(merged, vset, masks[static_cast<std::size_t>(k)]));
        }
      }
      const double rho = spearman(sim, val);
      if (!std::isnan(rho)) {
        rec.benefit_val_spearman = rho;
        spearman_sum += rho;
        ++spearman_rounds;
      }
    }

    // (b) aggregation within each coalition over all of its members
    std::vector<FlatParams> params;
    for (const auto& s : snaps) params.push_back(s.theta);
    for (Coalition s : partition.coalitions()) aggregate_coalition(s, params, counts);
    for (int k = 0; k < K; ++k) {
      models[static_cast<std::size_t>(k)] = Classifier::unflatten(params[static_cast<std::size_t>(k)], M, d);
    }

    if (config.strategy != Strategy::kLocal) {
      rec.bytes_up = param_bytes * K;
      rec.bytes_down = param_bytes * K;
    }
    res.summary.total_bytes_up += rec.bytes_up;
    res.summary.total_bytes_down += rec.bytes_down;

    for (int k = 0; k < K; ++k) {
      const auto& c = scenario.clients[static_cast<std::size_t>(k)];
      rec.accuracy.push_back(accuracy(models[static_cast<std::size_t>(k)], concat_tests(c, phase),
                                      masks[static_cast<std::size_t>(k)]));
      if (!phase_end) continue;
      for (int t = 0; t <= phase; ++t) {
        const auto& test = c.tasks[static_cast<std::size_t>(t)].test;
        res.accuracy.set(k, phase, t, accuracy(models[static_cast<std::size_t>(k)], test, masks[static_cast<std::size_t>(k)]));
        res.accuracy.set_count(k, t, static_cast<std::int64_t>(test.size()));
      }
    }
    res.rounds.push_back(std::move(rec));
  }

  res.summary.average_accuracy = average_accuracy(res.accuracy);
  res.summary.average_forgetting = average_forgetting(res.accuracy);
  res.summary.mean_spearman = spearman_rounds ? spearman_sum / spearman_rounds : 0.0;
  res.summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  res.final_models = std::move(models);
  return res;
}

RunResult run(const RunConfig& config) {
  config.validate();
  ScenarioConfig sc = config.scenario;
  sc.seed = config.seed;
  return run(config, build_scenario(sc));
}

// ---------------------------------------------------------------------------

nlohmann::json round_record_to_json(const RoundRecord& r) {
  nlohmann::json sc = nlohmann::json::array();
  for (Coalition c : r.stable_coalitions) sc.push_back(c.members());
  nlohmann::json j = {{"round", r.round},
                      {"task_phase", r.task_phase},
                      {"partition", partition_to_json(r.partition)},
                      {"recomputed", r.recomputed},
                      {"stable_coalitions", std::move(sc)},
                      {"traversal_rounds", r.traversal_rounds},
                      {"converged", r.converged},
                      {"benefits", r.benefits},
                      {"accuracy", r.accuracy},
                      {"bytes_up", r.bytes_up},
                      {"bytes_down", r.bytes_down}};
  j["equilibrium_verified"] = r.equilibrium_verified ? nlohmann::json(*r.equilibrium_verified) : nlohmann::json();
  j["benefit_val_spearman"] = r.benefit_val_spearman ? nlohmann::json(*r.benefit_val_spearman) : nlohmann::json();
  return j;
}

nlohmann::json summary_to_json(const RunSummary& s, const RunConfig& config) {
  return {{"strategy", to_string(config.strategy)},
          {"seed", config.seed},
          {"rounds", config.rounds},
          {"num_clients", config.scenario.num_clients},
          {"num_tasks", config.scenario.num_tasks},
          {"average_accuracy", s.average_accuracy},
          {"average_forgetting", s.average_forgetting},
          {"total_bytes_up", s.total_bytes_up},
          {"total_bytes_down", s.total_bytes_down},
          {"nonconverged_rounds", s.nonconverged_rounds},
          {"oracle_checked_rounds", s.oracle_checked_rounds},
          {"oracle_failures", s.oracle_failures},
          {"mean_benefit_val_spearman", s.mean_spearman},
          {"seconds", s.seconds}};
}

std::string accuracy_csv(const AccuracyMatrix& m) {
  std::ostringstream out;
  out << "client,learned_through,eval_task,accuracy,n\n";
  out << std::setprecision(17);
  for (int k = 0; k < m.num_clients(); ++k) {
    for (int i = 0; i < m.num_tasks(); ++i) {
      for (int t = 0; t <= i; ++t) {
        if (!m.has(k, i, t)) continue;
        out << k << ',' << i << ',' << t << ',' << m.get(k, i, t) << ',' << m.count(k, t) << '\n';
      }
    }
  }
  return out.str();
}

void write_run_outputs(const RunResult& result, const RunConfig& config, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  nlohmann::json summary = summary_to_json(result.summary, config);
  summary["config"] = run_config_to_json(config);
  save_json(summary, (base / "summary.json").string());
  {
    std::ofstream out(base / "rounds.jsonl");
    if (!out) throw std::runtime_error("cannot write rounds.jsonl");
    for (const auto& r : result.rounds) out << round_record_to_json(r).dump() << '\n';
  }
  std::ofstream csv(base / "accuracy.csv");
  if (!csv) throw std::runtime_error("cannot write accuracy.csv");
  csv << accuracy_csv(result.accuracy);
}

}  // namespace dcfcl
