#pragma once

// Shared helpers for the unit tests and the acceptance binary.

#include <cmath>
#include <random>
#include <vector>

#include "dcfcl/model.hpp"
#include "dcfcl/simulator.hpp"

namespace dcfcl::testing {

// Two client groups of four that meet the same six two-class tasks in their
// own orders; the second group sees every task with its labels swapped.
inline RunConfig two_cluster_config(Strategy strategy, std::uint64_t seed, int samples_per_class = 200) {
  RunConfig cfg;
  cfg.scenario.mode = ScenarioMode::kShuffle;
  cfg.scenario.num_clients = 8;
  cfg.scenario.num_tasks = 6;
  cfg.scenario.classes_per_task = 2;
  cfg.scenario.num_classes = 26;
  cfg.scenario.groups = 2;
  cfg.scenario.group_shift = GroupShift::kLabels;
  cfg.scenario.samples_per_class = samples_per_class;
  cfg.rounds = 60;
  cfg.strategy = strategy;
  cfg.seed = seed;
  cfg.benefit_correlation = false;
  return cfg;
}

// True when no coalition mixes clients of different groups.
inline bool separates_groups(const Partition& p, const Scenario& sc) {
  for (const auto& c : p.coalitions()) {
    const auto m = c.members();
    for (int i : m) {
      if (sc.clients[static_cast<std::size_t>(i)].group != sc.clients[static_cast<std::size_t>(m[0])].group) {
        return false;
      }
    }
  }
  return true;
}

inline Classifier random_classifier(int m, int d, std::mt19937_64& rng, double scale = 0.5) {
  std::normal_distribution<double> g(0.0, scale);
  Classifier clf(m, d);
  for (auto& w : clf.weights()) w = g(rng);
  for (auto& b : clf.bias()) b = g(rng);
  return clf;
}

inline Batch random_batch(int n, int d, const std::vector<int>& classes, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 1);
  Batch b;
  b.features = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
  for (auto& x : b.features.data) x = g(rng);
  for (int i = 0; i < n; ++i) b.labels.push_back(classes[pick(rng)]);
  return b;
}

/// Central differences of combined_loss in flatten() order.
inline std::vector<double> numeric_gradient(const Classifier& student, const Classifier* teacher,
                                            const Batch& batch, const Hyperparams& hp,
                                            const ClassMask& mask, double h = 1e-6) {
  const FlatParams base = student.flatten();
  std::vector<double> out(base.dim());
  for (std::size_t i = 0; i < base.dim(); ++i) {
    FlatParams plus = base, minus = base;
    plus.values[i] += h;
    minus.values[i] -= h;
    const auto sp = Classifier::unflatten(plus, student.num_classes(), student.feature_dim());
    const auto sm = Classifier::unflatten(minus, student.num_classes(), student.feature_dim());
    out[i] = (combined_loss(sp, teacher, batch, hp, mask) - combined_loss(sm, teacher, batch, hp, mask)) /
             (2.0 * h);
  }
  return out;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Relative error on entries whose magnitude exceeds 1e-8.
inline GradCheck compare_gradients(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  GradCheck r;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    if (scale <= 1e-8) continue;
    r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic[i] - numeric[i]) / scale);
    ++r.checked;
  }
  return r;
}

}  // namespace dcfcl::testing
