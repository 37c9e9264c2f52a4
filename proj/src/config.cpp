#include "dcfcl/config.hpp"

#include <fstream>
#include <functional>
#include <map>

namespace dcfcl {

using nlohmann::json;

namespace {

// Visits every key of an object, dispatching to a handler; unknown keys throw.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  ObjectReader& field(const std::string& key, T& out) {
    handlers_[key] = [&out, this, key](const json& v) { read(v, key, out); };
    return *this;
  }

  ObjectReader& nested(const std::string& key, std::function<void(const json&, const std::string&)> fn) {
    handlers_[key] = [fn, this, key](const json& v) { fn(v, child(key)); };
    return *this;
  }

  void run() const {
    for (const auto& [key, value] : obj_.items()) {
      auto it = handlers_.find(key);
      if (it == handlers_.end()) throw ConfigError("unknown config key '" + child(key) + "'");
      it->second(value);
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void read(const json& v, const std::string& key, int& out) const {
    if (!v.is_number_integer()) throw ConfigError("'" + child(key) + "' must be an integer");
    out = v.get<int>();
  }
  void read(const json& v, const std::string& key, std::uint64_t& out) const {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError("'" + child(key) + "' must be a nonnegative integer");
    }
    out = v.get<std::uint64_t>();
  }
  void read(const json& v, const std::string& key, double& out) const {
    if (!v.is_number()) throw ConfigError("'" + child(key) + "' must be a number");
    out = v.get<double>();
  }
  void read(const json& v, const std::string& key, bool& out) const {
    if (!v.is_boolean()) throw ConfigError("'" + child(key) + "' must be a boolean");
    out = v.get<bool>();
  }
  void read(const json& v, const std::string& key, std::string& out) const {
    if (!v.is_string()) throw ConfigError("'" + child(key) + "' must be a string");
    out = v.get<std::string>();
  }
  void read(const json& v, const std::string& key, std::optional<std::string>& out) const {
    if (v.is_null()) {
      out.reset();
      return;
    }
    std::string s;
    read(v, key, s);
    out = std::move(s);
  }

  const json& obj_;
  std::string path_;
  std::map<std::string, std::function<void(const json&)>> handlers_;
};

void read_scenario(const json& doc, const std::string& path, ScenarioConfig& sc) {
  std::string mode = sc.mode == ScenarioMode::kLtp ? "ltp" : "shuffle";
  std::string shift = sc.group_shift == GroupShift::kLabels ? "labels" : "features";
  ObjectReader(doc, path)
      .field("mode", mode)
      .field("num_clients", sc.num_clients)
      .field("num_tasks", sc.num_tasks)
      .field("classes_per_task", sc.classes_per_task)
      .field("num_classes", sc.num_classes)
      .field("feature_dim", sc.feature_dim)
      .field("samples_per_class", sc.samples_per_class)
      .field("blob_spread", sc.blob_spread)
      .field("heterogeneity", sc.heterogeneity)
      .field("groups", sc.groups)
      .field("group_shift", shift)
      .field("permute_task_order", sc.permute_task_order)
      .field("train_fraction", sc.train_fraction)
      .field("val_fraction", sc.val_fraction)
      .field("test_fraction", sc.test_fraction)
      .field("idx_images", sc.idx_images)
      .field("idx_labels", sc.idx_labels)
      .run();
  if (mode == "ltp") {
    sc.mode = ScenarioMode::kLtp;
  } else if (mode == "shuffle") {
    sc.mode = ScenarioMode::kShuffle;
  } else {
    throw ConfigError("'" + path + ".mode' must be \"ltp\" or \"shuffle\"");
  }
  if (shift == "labels") {
    sc.group_shift = GroupShift::kLabels;
  } else if (shift == "features") {
    sc.group_shift = GroupShift::kFeatures;
  } else {
    throw ConfigError("'" + path + ".group_shift' must be \"labels\" or \"features\"");
  }
}

void read_hyperparams(const json& doc, const std::string& path, Hyperparams& hp) {
  ObjectReader(doc, path)
      .field("lambda", hp.lambda)
      .field("temperature", hp.temperature)
      .field("learning_rate", hp.learning_rate)
      .field("local_iters", hp.local_iters)
      .field("batch_size", hp.batch_size)
      .field("epsilon", hp.epsilon)
      .run();
}

}  // namespace

CliConfig cli_config_from_json(const json& doc) {
  CliConfig cfg;
  std::string strategy = to_string(cfg.run.strategy);
  std::string cadence = to_string(cfg.run.cadence);
  ObjectReader(doc, "")
      .field("seed", cfg.run.seed)
      .field("rounds", cfg.run.rounds)
      .field("strategy", strategy)
      .field("oracle_checks", cfg.run.oracle_checks)
      .field("equilibrium_cadence", cadence)
      .field("benefit_correlation", cfg.run.benefit_correlation)
      .field("parallel_clients", cfg.run.parallel_clients)
      .field("output_dir", cfg.output_dir)
      .field("verbosity", cfg.verbosity)
      .nested("scenario", [&](const json& v, const std::string& p) { read_scenario(v, p, cfg.run.scenario); })
      .nested("hyperparams", [&](const json& v, const std::string& p) { read_hyperparams(v, p, cfg.run.hp); })
      .run();
  const auto s = parse_strategy(strategy);
  if (!s) throw ConfigError("'strategy' must be one of dcfcl, local, global_avg, static");
  cfg.run.strategy = *s;
  if (cadence == "round") {
    cfg.run.cadence = Cadence::kEveryRound;
  } else if (cadence == "task") {
    cfg.run.cadence = Cadence::kEveryTask;
  } else {
    throw ConfigError("'equilibrium_cadence' must be \"round\" or \"task\"");
  }
  cfg.run.scenario.seed = cfg.run.seed;
  try {
    cfg.run.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

CliConfig load_cli_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cli_config_from_json(doc);
}

json run_config_to_json(const RunConfig& c) {
  const auto& s = c.scenario;
  json scenario = {{"mode", s.mode == ScenarioMode::kLtp ? "ltp" : "shuffle"},
                   {"num_clients", s.num_clients},
                   {"num_tasks", s.num_tasks},
                   {"classes_per_task", s.classes_per_task},
                   {"num_classes", s.num_classes},
                   {"feature_dim", s.feature_dim},
                   {"samples_per_class", s.samples_per_class},
                   {"blob_spread", s.blob_spread},
                   {"heterogeneity", s.heterogeneity},
                   {"groups", s.groups},
                   {"group_shift", s.group_shift == GroupShift::kLabels ? "labels" : "features"},
                   {"permute_task_order", s.permute_task_order},
                   {"train_fraction", s.train_fraction},
                   {"val_fraction", s.val_fraction},
                   {"test_fraction", s.test_fraction}};
  scenario["idx_images"] = s.idx_images ? json(*s.idx_images) : json();
  scenario["idx_labels"] = s.idx_labels ? json(*s.idx_labels) : json();
  return {{"seed", c.seed},
          {"rounds", c.rounds},
          {"strategy", to_string(c.strategy)},
          {"oracle_checks", c.oracle_checks},
          {"equilibrium_cadence", to_string(c.cadence)},
          {"benefit_correlation", c.benefit_correlation},
          {"parallel_clients", c.parallel_clients},
          {"scenario", std::move(scenario)},
          {"hyperparams",
           {{"lambda", c.hp.lambda},
            {"temperature", c.hp.temperature},
            {"learning_rate", c.hp.learning_rate},
            {"local_iters", c.hp.local_iters},
            {"batch_size", c.hp.batch_size},
            {"epsilon", c.hp.epsilon}}}};
}

}  // namespace dcfcl
