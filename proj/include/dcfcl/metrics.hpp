#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dcfcl {

/// a(k, i, t): test accuracy of client k on its task t after learning its
/// task i (t <= i). n(k, t): test sample count of that task.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  AccuracyMatrix(int num_clients, int num_tasks);

  int num_clients() const { return clients_; }
  int num_tasks() const { return tasks_; }

  void set(int client, int learned_through, int eval_task, double acc);
  bool has(int client, int learned_through, int eval_task) const;
  double get(int client, int learned_through, int eval_task) const;

  void set_count(int client, int task, std::int64_t n);
  std::int64_t count(int client, int task) const;

 private:
  std::size_t index(int client, int learned_through, int eval_task) const;

  int clients_ = 0;
  int tasks_ = 0;
  std::vector<double> acc_;  // NaN = not recorded
  std::vector<std::int64_t> n_;
};

/// sum_k sum_t a(k,T,t) n(k,t) / sum_k sum_t n(k,t), T the last task.
double average_accuracy(const AccuracyMatrix& m);

/// sum_k sum_{t<T} max_{i>=t} (a(k,i,t) - a(k,T,t)) n(k,t) / sum_k sum_{t<T} n(k,t).
/// The peak ranges over every recorded phase including the last, so the
/// result is >= 0. Zero when there is a single task.
double average_forgetting(const AccuracyMatrix& m);

/// Spearman rank correlation with average ranks for ties. NaN if either
/// input is constant or fewer than two points are given.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace dcfcl
