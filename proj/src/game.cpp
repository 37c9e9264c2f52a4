#include "dcfcl/game.hpp"

#include <algorithm>
#include <stdexcept>

namespace dcfcl {

Partition::Partition(std::vector<Coalition> coalitions) : coalitions_(std::move(coalitions)) {
  Coalition::Mask seen = 0;
  for (Coalition c : coalitions_) {
    if (c.empty()) throw std::invalid_argument("Partition: empty coalition");
    if (seen & c.mask()) throw std::invalid_argument("Partition: overlapping coalitions");
    seen |= c.mask();
  }
  std::sort(coalitions_.begin(), coalitions_.end());
}

Partition Partition::singletons(Coalition clients) {
  std::vector<Coalition> out;
  for (int m : clients.members()) out.push_back(Coalition::singleton(m));
  return Partition(std::move(out));
}

Partition Partition::singletons(int k) { return singletons(Coalition::full(k)); }

Partition Partition::grand(int k) {
  if (k == 0) return {};
  return Partition({Coalition::full(k)});
}

Partition Partition::from_rgs(std::span<const int> rgs) {
  std::vector<Coalition::Mask> blocks;
  for (std::size_t i = 0; i < rgs.size(); ++i) {
    const auto b = static_cast<std::size_t>(rgs[i]);
    if (b >= blocks.size()) blocks.resize(b + 1, 0);
    blocks[b] |= Coalition::Mask{1} << i;
  }
  std::vector<Coalition> out;
  for (auto m : blocks) out.emplace_back(m);
  return Partition(std::move(out));
}

Coalition Partition::clients() const {
  Coalition::Mask m = 0;
  for (Coalition c : coalitions_) m |= c.mask();
  return Coalition(m);
}

bool Partition::contains(Coalition s) const {
  return std::binary_search(coalitions_.begin(), coalitions_.end(), s);
}

Coalition Partition::coalition_of(int k) const {
  for (Coalition c : coalitions_) {
    if (c.contains(k)) return c;
  }
  throw std::out_of_range("Partition: client " + std::to_string(k) + " not covered");
}

Partition Partition::with_formed(Coalition s) const {
  std::vector<Coalition> out;
  out.reserve(coalitions_.size() + 1);
  out.push_back(s);
  for (Coalition c : coalitions_) {
    const Coalition rest = c.minus(s);
    if (!rest.empty()) out.push_back(rest);
  }
  return Partition(std::move(out));
}

Partition Partition::without(Coalition s) const {
  std::vector<Coalition> out;
  for (Coalition c : coalitions_) {
    if (c != s) out.push_back(c);
  }
  return Partition(std::move(out));
}

Partition Partition::merged_with(const Partition& other) const {
  std::vector<Coalition> out = coalitions_;
  out.insert(out.end(), other.coalitions_.begin(), other.coalitions_.end());
  return Partition(std::move(out));
}

std::vector<std::vector<int>> Partition::to_lists() const {
  std::vector<std::vector<int>> out;
  for (Coalition c : coalitions_) out.push_back(c.members());
  return out;
}

std::string Partition::to_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < coalitions_.size(); ++i) {
    if (i) s += ",";
    s += coalitions_[i].to_string();
  }
  return s + "]";
}

CooperativeState CooperativeState::make(const Partition& partition, const BenefitTable& table) {
  CooperativeState st;
  st.partition = partition;
  st.benefits.assign(static_cast<std::size_t>(table.num_clients()), 0.0);
  for (Coalition c : partition.coalitions()) {
    for (int k : c.members()) st.benefits[static_cast<std::size_t>(k)] = table.at(c, k);
  }
  return st;
}

namespace {

Transition classify(Coalition s, std::span<const double> current, const BenefitTable& table) {
  const auto proposed = table.benefits(s);
  bool strict = false;
  int r = 0;
  for (Coalition::Mask m = s.mask(); m != 0; m &= m - 1, ++r) {
    const double now = current[static_cast<std::size_t>(std::countr_zero(m))];
    const double then = proposed[static_cast<std::size_t>(r)];
    if (!weakly_improves(then, now)) return Transition::kNone;
    if (strictly_improves(then, now)) strict = true;
  }
  return strict ? Transition::kStrict : Transition::kWeak;
}

}  // namespace

Transition is_profitable_transition(Coalition s, const CooperativeState& from,
                                    const BenefitTable& table) {
  if (s.empty()) throw std::invalid_argument("is_profitable_transition: empty coalition");
  if (from.partition.contains(s)) return Transition::kNone;
  if (!s.subset_of(from.partition.clients())) return Transition::kNone;
  if (!table.has(s)) throw std::out_of_range("coalition " + s.to_string() + " missing from table");
  return classify(s, from.benefits, table);
}

std::optional<Coalition> find_blocking_coalition(const CooperativeState& state,
                                                 const BenefitTable& table) {
  const Coalition clients = state.partition.clients();
  for (Coalition s : table.coalitions()) {
    if (!s.subset_of(clients) || state.partition.contains(s)) continue;
    if (classify(s, state.benefits, table) == Transition::kStrict) return s;
  }
  return std::nullopt;
}

bool is_equilibrium(const CooperativeState& state, const BenefitTable& table) {
  return !find_blocking_coalition(state, table).has_value();
}

std::uint64_t bell_number(int n) {
  if (n < 0) throw std::invalid_argument("bell_number: negative n");
  std::vector<std::uint64_t> bell{1};
  std::vector<std::uint64_t> binom{1};  // row n of Pascal's triangle
  for (int i = 0; i < n; ++i) {
    std::uint64_t next = 0;
    for (int k = 0; k <= i; ++k) next += binom[static_cast<std::size_t>(k)] * bell[static_cast<std::size_t>(k)];
    bell.push_back(next);
    std::vector<std::uint64_t> row(binom.size() + 1, 1);
    for (std::size_t k = 1; k < binom.size(); ++k) row[k] = binom[k - 1] + binom[k];
    binom = std::move(row);
  }
  return bell[static_cast<std::size_t>(n)];
}

std::vector<Partition> enumerate_partitions(int k, int max_clients) {
  if (k < 0) throw std::invalid_argument("enumerate_partitions: negative client count");
  if (k > max_clients) {
    throw std::invalid_argument("enumerate_partitions: K = " + std::to_string(k) +
                                " exceeds the oracle cap " + std::to_string(max_clients));
  }
  std::vector<Partition> out;
  if (k == 0) {
    out.emplace_back();
    return out;
  }
  // restricted growth strings: rgs[0] = 0, rgs[i] <= 1 + max(rgs[0..i-1])
  std::vector<int> rgs(static_cast<std::size_t>(k), 0);
  std::vector<int> prefix_max(static_cast<std::size_t>(k), 0);
  while (true) {
    out.push_back(Partition::from_rgs(rgs));
    int i = k - 1;
    while (i > 0 && rgs[static_cast<std::size_t>(i)] > prefix_max[static_cast<std::size_t>(i - 1)]) --i;
    if (i == 0) break;
    ++rgs[static_cast<std::size_t>(i)];
    prefix_max[static_cast<std::size_t>(i)] =
        std::max(prefix_max[static_cast<std::size_t>(i - 1)], rgs[static_cast<std::size_t>(i)]);
    for (int j = i + 1; j < k; ++j) {
      rgs[static_cast<std::size_t>(j)] = 0;
      prefix_max[static_cast<std::size_t>(j)] = prefix_max[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

namespace {

void check_oracle_table(const BenefitTable& table, int k) {
  if (k != table.num_clients()) throw std::invalid_argument("brute_force: K does not match table");
  if (k > kOracleMaxClients) throw std::invalid_argument("brute_force: K above oracle cap");
  if (!table.is_complete()) throw std::invalid_argument("brute_force: table must cover every coalition");
}

}  // namespace

namespace {

bool is_stable_partition(const Partition& p, std::span<const Coalition> coalitions,
                         const BenefitTable& table) {
  const auto st = CooperativeState::make(p, table);
  for (Coalition s : coalitions) {
    if (p.contains(s)) continue;
    if (classify(s, st.benefits, table) == Transition::kStrict) return false;
  }
  return true;
}

}  // namespace

std::vector<Partition> brute_force_equilibria_serial(const BenefitTable& table, int k) {
  check_oracle_table(table, k);
  const auto coalitions = table.coalitions();
  std::vector<Partition> out;
  for (const auto& p : enumerate_partitions(k)) {
    if (is_stable_partition(p, coalitions, table)) out.push_back(p);
  }
  return out;
}

std::vector<Partition> brute_force_equilibria(const BenefitTable& table, int k) {
  check_oracle_table(table, k);
  const auto partitions = enumerate_partitions(k);
  const auto coalitions = table.coalitions();
  std::vector<std::uint8_t> stable(partitions.size(), 0);
  const auto n = static_cast<std::ptrdiff_t>(partitions.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
    const auto i = static_cast<std::size_t>(idx);
    stable[i] = is_stable_partition(partitions[i], coalitions, table) ? 1 : 0;
  }
  std::vector<Partition> out;
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (stable[i]) out.push_back(partitions[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Merge-blocking

EquilibriumResult merge_blocking(const BenefitTable& table, const Partition& initial,
                                 std::span<const Coalition> coalition_set,
                                 const MergeBlockingOptions& options) {
  const int k = table.num_clients();
  const Coalition active = initial.clients();
  if (!active.subset_of(Coalition::full(k))) {
    throw std::invalid_argument("merge_blocking: initial partition outside the table's clients");
  }
  const int max_passes = options.max_passes > 0 ? options.max_passes : 10 * std::max(k, 1);

  std::vector<Coalition> search(coalition_set.begin(), coalition_set.end());
  std::stable_sort(search.begin(), search.end(), BySizeThenLex{});
  search.erase(std::unique(search.begin(), search.end()), search.end());
  std::erase_if(search, [&](Coalition s) { return !s.subset_of(active); });

  EquilibriumResult res;
  Partition up = initial;
  std::optional<Partition> prev;
  std::vector<Coalition> frozen;
  auto current = CooperativeState::make(up, table).benefits;

  while ((!prev || up != *prev) && !up.empty()) {
    if (res.traversal_rounds >= max_passes) {
      res.partition = up.merged_with(Partition(frozen));
      res.stable_coalitions = frozen;
      res.converged = false;
      return res;
    }
    prev = up;
    ++res.traversal_rounds;
    std::map<Coalition, int> counts;

    for (Coalition s : search) {
      if (up.contains(s)) continue;
      if (classify(s, current, table) != Transition::kStrict) continue;
      Partition next = up.with_formed(s);
      if (options.on_transition) options.on_transition(s, up, next);
      up = std::move(next);
      ++res.transitions;
      for (Coalition c : up.coalitions()) {
        for (int m : c.members()) current[static_cast<std::size_t>(m)] = table.at(c, m);
      }
      std::erase_if(counts, [&](const auto& kv) { return !up.contains(kv.first); });
      for (Coalition c : up.coalitions()) ++counts[c];
    }

    if (!counts.empty()) {
      // std::map iterates lexicographically, so the first maximum wins ties
      auto best = counts.begin();
      for (auto it = counts.begin(); it != counts.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      const Coalition sc = best->first;
      frozen.push_back(sc);
      up = up.without(sc);
      std::erase_if(search, [&](Coalition s) { return s.intersects(sc); });
    } else {
      // no blocking coalition left: the residual partition joins the frozen ones
      res.partition = up.merged_with(Partition(frozen));
      res.stable_coalitions = frozen;
      res.converged = true;
      return res;
    }
  }
  res.partition = up.merged_with(Partition(frozen));
  res.stable_coalitions = frozen;
  res.converged = true;
  return res;
}

EquilibriumResult merge_blocking(const BenefitTable& table, const Partition& initial) {
  const auto all = table.coalitions();
  return merge_blocking(table, initial, all);
}

EquilibriumResult dynamic_evolution(int round, const EquilibriumResult* prev,
                                    const BenefitTable& table) {
  const int k = table.num_clients();
  const auto all = all_coalitions(k);
  Partition seed = Partition::singletons(k);
  if (round > 0 && prev != nullptr) {
    if (!prev->partition.covers_exactly(Coalition::full(k))) {
      throw std::invalid_argument("dynamic_evolution: previous partition does not cover all clients");
    }
    seed = prev->partition;
  }
  return merge_blocking(table, seed, all);
}

EvolutionStep dynamic_evolution(int round, const EquilibriumResult* prev,
                                const AffinityGraph& graph) {
  EvolutionStep step;
  step.table = build_benefit_table(graph);
  step.result = dynamic_evolution(round, prev, step.table);
  return step;
}

}  // namespace dcfcl
