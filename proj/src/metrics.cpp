#include "dcfcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dcfcl {

AccuracyMatrix::AccuracyMatrix(int num_clients, int num_tasks)
    : clients_(num_clients),
      tasks_(num_tasks),
      acc_(static_cast<std::size_t>(num_clients) * num_tasks * num_tasks,
           std::numeric_limits<double>::quiet_NaN()),
      n_(static_cast<std::size_t>(num_clients) * num_tasks, 0) {
  if (num_clients < 1 || num_tasks < 1) throw std::invalid_argument("AccuracyMatrix: empty shape");
}

std::size_t AccuracyMatrix::index(int client, int learned_through, int eval_task) const {
  if (client < 0 || client >= clients_ || learned_through < 0 || learned_through >= tasks_ ||
      eval_task < 0 || eval_task > learned_through) {
    throw std::out_of_range("AccuracyMatrix: index out of range");
  }
  return (static_cast<std::size_t>(client) * tasks_ + learned_through) * tasks_ + eval_task;
}

void AccuracyMatrix::set(int client, int learned_through, int eval_task, double acc) {
  if (!(acc >= 0.0 && acc <= 1.0)) throw std::invalid_argument("AccuracyMatrix: accuracy outside [0,1]");
  acc_[index(client, learned_through, eval_task)] = acc;
}

bool AccuracyMatrix::has(int client, int learned_through, int eval_task) const {
  return !std::isnan(acc_[index(client, learned_through, eval_task)]);
}

double AccuracyMatrix::get(int client, int learned_through, int eval_task) const {
  const double v = acc_[index(client, learned_through, eval_task)];
  if (std::isnan(v)) throw std::out_of_range("AccuracyMatrix: entry not recorded");
  return v;
}

void AccuracyMatrix::set_count(int client, int task, std::int64_t n) {
  if (client < 0 || client >= clients_ || task < 0 || task >= tasks_) {
    throw std::out_of_range("AccuracyMatrix: index out of range");
  }
  if (n < 0) throw std::invalid_argument("AccuracyMatrix: negative count");
  n_[static_cast<std::size_t>(client) * tasks_ + task] = n;
}

std::int64_t AccuracyMatrix::count(int client, int task) const {
  if (client < 0 || client >= clients_ || task < 0 || task >= tasks_) {
    throw std::out_of_range("AccuracyMatrix: index out of range");
  }
  return n_[static_cast<std::size_t>(client) * tasks_ + task];
}

double average_accuracy(const AccuracyMatrix& m) {
  const int last = m.num_tasks() - 1;
  double num = 0.0;
  double den = 0.0;
  for (int k = 0; k < m.num_clients(); ++k) {
    for (int t = 0; t <= last; ++t) {
      const auto n = static_cast<double>(m.count(k, t));
      num += m.get(k, last, t) * n;
      den += n;
    }
  }
  if (den == 0.0) throw std::invalid_argument("average_accuracy: zero total sample count");
  return num / den;
}

double average_forgetting(const AccuracyMatrix& m) {
  const int last = m.num_tasks() - 1;
  if (last == 0) return 0.0;
  double num = 0.0;
  double den = 0.0;
  for (int k = 0; k < m.num_clients(); ++k) {
    for (int t = 0; t < last; ++t) {
      const double final_acc = m.get(k, last, t);
      double peak = final_acc;
      for (int i = t; i < last; ++i) {
        if (m.has(k, i, t)) peak = std::max(peak, m.get(k, i, t));
      }
      const auto n = static_cast<double>(m.count(k, t));
      num += (peak - final_acc) * n;
      den += n;
    }
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q) rank[order[q]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() < 2) return nan;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return nan;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace dcfcl
