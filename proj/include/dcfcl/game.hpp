#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dcfcl/affinity.hpp"
#include "dcfcl/coalition.hpp"

namespace dcfcl {

/// Slack on the >= side of benefit comparisons: x >= y  <=>  x > y - kBenefitSlack.
inline constexpr double kBenefitSlack = 1e-12;

/// Brute-force routines refuse larger client counts (B_8 = 4140 partitions).
inline constexpr int kOracleMaxClients = 8;

inline bool weakly_improves(double candidate, double current) {
  return candidate > current - kBenefitSlack;
}
inline bool strictly_improves(double candidate, double current) { return candidate > current; }

/// Disjoint coalitions, kept sorted lexicographically (i.e. by smallest member).
class Partition {
 public:
  Partition() = default;
  /// Throws std::invalid_argument on empty or overlapping coalitions.
  explicit Partition(std::vector<Coalition> coalitions);

  static Partition singletons(int k);
  static Partition singletons(Coalition clients);
  static Partition grand(int k);
  /// Restricted-growth string: client i goes to block rgs[i].
  static Partition from_rgs(std::span<const int> rgs);

  const std::vector<Coalition>& coalitions() const { return coalitions_; }
  std::size_t size() const { return coalitions_.size(); }
  bool empty() const { return coalitions_.empty(); }
  /// Union of all coalitions.
  Coalition clients() const;
  bool contains(Coalition s) const;
  /// The coalition holding client k; throws if k is not covered.
  Coalition coalition_of(int k) const;
  bool covers_exactly(Coalition clients) const { return this->clients() == clients; }

  /// {S} together with every existing coalition minus S's members, empties dropped.
  Partition with_formed(Coalition s) const;
  Partition without(Coalition s) const;
  Partition merged_with(const Partition& other) const;

  std::vector<std::vector<int>> to_lists() const;
  std::string to_string() const;

  friend bool operator==(const Partition&, const Partition&) = default;
  friend bool operator<(const Partition& a, const Partition& b) { return a.coalitions_ < b.coalitions_; }

 private:
  std::vector<Coalition> coalitions_;
};

/// A partition plus the benefit each covered client reads from the table.
struct CooperativeState {
  Partition partition;
  std::vector<double> benefits;  // indexed by client id; 0 for uncovered ids

  static CooperativeState make(const Partition& partition, const BenefitTable& table);
};

enum class Transition { kNone, kWeak, kStrict };

/// Weak if every member of S weakly gains by forming S, strict (S blocks) if
/// additionally some member strictly gains. S already in the partition is kNone.
Transition is_profitable_transition(Coalition s, const CooperativeState& from,
                                    const BenefitTable& table);

/// First blocking coalition among the table's coalitions that lie inside the
/// state's client set, in size-then-lexicographic order.
std::optional<Coalition> find_blocking_coalition(const CooperativeState& state,
                                                 const BenefitTable& table);
bool is_equilibrium(const CooperativeState& state, const BenefitTable& table);

/// All set partitions of {0..k-1} in lexicographic restricted-growth order.
std::vector<Partition> enumerate_partitions(int k, int max_clients = kOracleMaxClients);

/// Bell number via the recurrence B_{n+1} = sum_k C(n,k) B_k.
std::uint64_t bell_number(int n);

/// Every equilibrium partition of a complete table, by exhaustive scan.
/// Parallel over partitions; result is in enumeration order.
std::vector<Partition> brute_force_equilibria(const BenefitTable& table, int k);
std::vector<Partition> brute_force_equilibria_serial(const BenefitTable& table, int k);

struct EquilibriumResult {
  Partition partition;
  std::vector<Coalition> stable_coalitions;  // extraction order
  int traversal_rounds = 0;
  int transitions = 0;
  bool converged = false;

  friend bool operator==(const EquilibriumResult&, const EquilibriumResult&) = default;
};

struct MergeBlockingOptions {
  /// Pass cap; <= 0 means 10 * K.
  int max_passes = 0;
  /// Called after each accepted transition with (S, before, after).
  std::function<void(Coalition, const Partition&, const Partition&)> on_transition;
};

/// Merge-blocking search. Traverses coalition_set in size-then-lexicographic
/// order; each blocking coalition S replaces the working partition with
/// {S} plus the remnants of the coalitions it broke. A count table tracks how
/// many consecutive updates each coalition has survived; after a pass with
/// updates the longest survivor (ties: lexicographically smallest) is frozen as
/// a stable coalition and every coalition touching its clients is pruned.
/// Stops when a pass makes no update or every client is frozen.
EquilibriumResult merge_blocking(const BenefitTable& table, const Partition& initial,
                                 std::span<const Coalition> coalition_set,
                                 const MergeBlockingOptions& options = {});
EquilibriumResult merge_blocking(const BenefitTable& table, const Partition& initial);

/// One evolution step: round 0 starts merge-blocking from singletons, later
/// rounds start from the previous equilibrium, always over the full coalition set.
EquilibriumResult dynamic_evolution(int round, const EquilibriumResult* prev,
                                    const BenefitTable& table);

struct EvolutionStep {
  BenefitTable table;
  EquilibriumResult result;
};
/// Builds the round's benefit table from the affinity graph, then evolves.
EvolutionStep dynamic_evolution(int round, const EquilibriumResult* prev,
                                const AffinityGraph& graph);

}  // namespace dcfcl
