#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcfcl/coalition.hpp"
#include "dcfcl/params.hpp"

namespace dcfcl {

/// One client's round snapshot: parameters after local training, realized
/// update, and current-task sample count.
struct ClientSnapshot {
  FlatParams theta;
  GradientProxy grad;
  std::int64_t samples = 1;
};

/// Pairwise gradient cosines a_ij, model cosines b_ij and norms for one round.
struct AffinityGraph {
  int num_clients = 0;
  std::vector<double> a;  // K*K, row-major, symmetric
  std::vector<double> b;  // K*K, row-major, symmetric
  std::vector<double> g_norms;
  std::vector<double> theta_norms;
  std::vector<std::int64_t> sample_counts;
  double epsilon = 0.0;

  double grad_cos(int i, int j) const { return a[static_cast<std::size_t>(i) * num_clients + j]; }
  double model_cos(int i, int j) const { return b[static_cast<std::size_t>(i) * num_clients + j]; }
};

AffinityGraph build_affinity_graph(std::span<const ClientSnapshot> clients, double epsilon);

/// r(i,j) = a_ij + epsilon * b_ij.
double pairwise_benefit(int i, int j, const AffinityGraph& graph);

/// Benefit of i in S from pairwise quantities only:
/// 0 for S={i}, r(i,j) for S={i,j}, otherwise
///   sum_p alpha_p a_ip |g_p| / sqrt(sum_p alpha_p^2 |g_p|^2 + I)
/// + eps * (same with b, |theta|, H)
/// with alpha_p = n_p / sum_{q in S\{i}} n_q over peers p in S\{i} and
/// I = sum_{p<q} 2 alpha_p alpha_q a_pq |g_p||g_q| (H analogous).
double coalition_benefit_closed(int i, Coalition s, const AffinityGraph& graph);

/// Gradient and model parts of the closed form separately (benefit = grad + eps*model).
struct BenefitParts {
  double grad = 0.0;
  double model = 0.0;
};
BenefitParts coalition_benefit_parts(int i, Coalition s, const AffinityGraph& graph);

/// Oracle: aggregate peers' (g, theta) by sample weight, then take cosines
/// against i's own vectors.
double coalition_benefit_direct(int i, Coalition s, std::span<const ClientSnapshot> clients,
                                double epsilon);

/// Per-member benefits u_i for a set of coalitions over K clients.
/// Members of a coalition are stored in ascending id order.
class BenefitTable {
 public:
  static constexpr int kMaxTableClients = 20;

  BenefitTable() = default;
  explicit BenefitTable(int num_clients);

  int num_clients() const { return num_clients_; }
  bool has(Coalition s) const { return s.mask() < present_.size() && present_[s.mask()] != 0; }
  double at(Coalition s, int member) const;
  void set(Coalition s, int member, double value);
  void mark_present(Coalition s) {
    check(s);
    present_[s.mask()] = 1;
  }
  std::span<const double> benefits(Coalition s) const;
  std::span<double> benefits(Coalition s);

  /// Coalitions present, size-ascending then lexicographic.
  std::vector<Coalition> coalitions() const;
  std::size_t coalition_count() const;
  /// Sum of |S| over present coalitions.
  std::size_t entry_count() const;
  bool is_complete() const;

  friend bool operator==(const BenefitTable&, const BenefitTable&) = default;

 private:
  std::size_t offset(Coalition s) const { return offsets_[s.mask()]; }
  void check(Coalition s) const;

  int num_clients_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint8_t> present_;
  std::vector<double> values_;
};

/// Closed-form entries for every (S, i in S), parallel over coalitions.
BenefitTable build_benefit_table(const AffinityGraph& graph, std::span<const Coalition> coalition_set);
BenefitTable build_benefit_table(const AffinityGraph& graph);

/// Single-threaded reference for build_benefit_table.
BenefitTable build_benefit_table_serial(const AffinityGraph& graph,
                                        std::span<const Coalition> coalition_set);

}  // namespace dcfcl
