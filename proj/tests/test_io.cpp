#include <doctest.h>

#include "dcfcl/config.hpp"
#include "dcfcl/instances.hpp"
#include "dcfcl/serialize.hpp"

using namespace dcfcl;
using nlohmann::json;

TEST_CASE("benefit tables round-trip through JSON") {
  const auto t = random_affinity_table(5, 4, 0.8, 3);
  const auto doc = table_to_json(t);
  CHECK(doc.at("num_clients") == 5);
  CHECK(doc.at("coalitions").size() == 31);
  CHECK(table_from_json(doc) == t);
  CHECK(table_from_json(json::parse(doc.dump())) == t);
}

TEST_CASE("malformed tables are rejected") {
  const json good = table_to_json(zero_table(2));
  auto bad = good;
  bad["extra"] = 1;
  CHECK_THROWS_AS(table_from_json(bad), FormatError);

  bad = good;
  bad["coalitions"][2]["members"] = {1, 0};
  CHECK_THROWS_AS(table_from_json(bad), FormatError);

  bad = good;
  bad["coalitions"][2]["benefits"] = {0.5};
  CHECK_THROWS_AS(table_from_json(bad), FormatError);

  bad = good;
  bad["coalitions"][0]["benefits"] = {0.5};
  CHECK_THROWS_AS(table_from_json(bad), FormatError);

  bad = good;
  bad["coalitions"].erase(1);
  CHECK_THROWS_AS(table_from_json(bad), FormatError);

  bad = good;
  bad["coalitions"][2]["members"] = {0, 5};
  CHECK_THROWS_AS(table_from_json(bad), FormatError);

  bad = good;
  bad["num_clients"] = "two";
  CHECK_THROWS_AS(table_from_json(bad), FormatError);
}

TEST_CASE("a table may omit multi-client coalitions") {
  json doc = {{"num_clients", 3},
              {"coalitions",
               {{{"members", {0}}, {"benefits", {0.0}}},
                {{"members", {1}}, {"benefits", {0.0}}},
                {{"members", {2}}, {"benefits", {0.0}}},
                {{"members", {0, 2}}, {"benefits", {0.3, 0.1}}}}}};
  const auto t = table_from_json(doc);
  CHECK(t.coalition_count() == 4);
  CHECK(t.at(Coalition{0, 2}, 2) == 0.1);
  CHECK_FALSE(t.is_complete());
}

TEST_CASE("partitions and equilibrium results serialize") {
  const Partition p({Coalition{0, 3}, Coalition{1}, Coalition{2}});
  CHECK(partition_to_json(p) == json::parse("[[0,3],[1],[2]]"));
  CHECK(partition_from_json(partition_to_json(p)) == p);
  CHECK_THROWS_AS(partition_from_json(json::parse("[[0,1],[1]]")), FormatError);

  const auto r = merge_blocking(grand_dominant_table(3), Partition::singletons(3));
  const auto j = equilibrium_to_json(r);
  CHECK(j.at("partition") == json::parse("[[0,1,2]]"));
  CHECK(j.at("converged") == true);
}

TEST_CASE("config parsing") {
  const auto cfg = cli_config_from_json(json::parse(R"({
    "seed": 12, "rounds": 12, "strategy": "global_avg", "equilibrium_cadence": "task",
    "output_dir": "out", "verbosity": 0,
    "scenario": {"mode": "shuffle", "num_clients": 3, "num_tasks": 3, "groups": 1,
                 "group_shift": "features", "permute_task_order": false},
    "hyperparams": {"lambda": 0.5, "local_iters": 7}
  })"));
  CHECK(cfg.run.seed == 12);
  CHECK(cfg.run.scenario.seed == 12);
  CHECK(cfg.run.strategy == Strategy::kGlobalAvg);
  CHECK(cfg.run.cadence == Cadence::kEveryTask);
  CHECK(cfg.run.scenario.mode == ScenarioMode::kShuffle);
  CHECK(cfg.run.scenario.num_clients == 3);
  CHECK(cfg.run.scenario.group_shift == GroupShift::kFeatures);
  CHECK_FALSE(cfg.run.scenario.permute_task_order);
  CHECK(cfg.run.hp.lambda == 0.5);
  CHECK(cfg.run.hp.local_iters == 7);
  CHECK(cfg.run.hp.temperature == 2.0);
  CHECK(cfg.output_dir == "out");

  const auto back = cli_config_from_json(run_config_to_json(cfg.run));
  CHECK(run_config_to_json(back.run) == run_config_to_json(cfg.run));
}

TEST_CASE("config errors name the offending key") {
  auto message = [](const char* text) {
    try {
      cli_config_from_json(json::parse(text));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message(R"({"sed": 1})").find("'sed'") != std::string::npos);
  CHECK(message(R"({"scenario": {"num_client": 4}})").find("scenario.num_client") != std::string::npos);
  CHECK(message(R"({"hyperparams": {"lambda": "high"}})").find("hyperparams.lambda") != std::string::npos);
  CHECK(message(R"({"strategy": "fedprox"})").find("strategy") != std::string::npos);
  CHECK(message(R"({"rounds": 7})").find("divisible") != std::string::npos);
  CHECK(message(R"({"scenario": {"group_shift": "both"}})").find("scenario.group_shift") != std::string::npos);
  CHECK(message(R"({"seed": -3})").find("seed") != std::string::npos);
  CHECK(message(R"([1, 2])").find("object") != std::string::npos);
}
