#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "dcfcl/game.hpp"
#include "dcfcl/instances.hpp"
#include "dcfcl/serialize.hpp"
#include "oracles.hpp"

using namespace dcfcl;
using namespace dcfcl::testing;

namespace {

// Set partitions of {0..k-1} by recursive placement, independent of the
// library's restricted-growth enumeration.
void place(int i, int k, std::vector<std::uint32_t>& blocks, std::vector<std::vector<std::uint32_t>>& out) {
  if (i == k) {
    auto b = blocks;
    std::sort(b.begin(), b.end());
    out.push_back(b);
    return;
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    blocks[b] |= 1u << i;
    place(i + 1, k, blocks, out);
    blocks[b] &= ~(1u << i);
  }
  blocks.push_back(1u << i);
  place(i + 1, k, blocks, out);
  blocks.pop_back();
}

std::vector<std::vector<std::uint32_t>> naive_partitions(int k) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> blocks;
  place(0, k, blocks, out);
  return out;
}

std::vector<std::uint32_t> sorted_masks(const Partition& p) {
  auto m = masks_of(p.coalitions());
  std::sort(m.begin(), m.end());
  return m;
}

// No coalition inside the residual clients, or inside a single stable
// coalition's clients, blocks the result. Blocking coalitions spanning a
// stable coalition and anything else are pruned by construction.
bool restricted_sound(const EquilibriumResult& r, const BenefitTable& t) {
  const auto u = naive_state(masks_of(r.partition.coalitions()), t);
  Coalition residual = r.partition.clients();
  std::vector<Coalition> scopes;
  for (auto sc : r.stable_coalitions) {
    residual = residual.minus(sc);
    scopes.push_back(sc);
  }
  scopes.push_back(residual);
  for (auto scope : scopes) {
    for (auto s : all_subcoalitions(scope)) {
      if (r.partition.contains(s)) continue;
      bool weak = true, strict = false;
      for (int m : s.members()) {
        const double v = t.at(s, m), cur = u[static_cast<std::size_t>(m)];
        weak = weak && v > cur - 1e-12;
        strict = strict || v > cur;
      }
      if (weak && strict) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("Bell numbers") {
  const std::vector<std::uint64_t> bell{1, 1, 2, 5, 15, 52, 203, 877, 4140};
  for (int n = 0; n <= 8; ++n) CHECK(bell_number(n) == bell[static_cast<std::size_t>(n)]);
  for (int k = 1; k <= 7; ++k) {
    const auto parts = enumerate_partitions(k);
    CHECK(parts.size() == bell[static_cast<std::size_t>(k)]);
    CHECK(parts.size() == naive_partitions(k).size());
    std::set<Partition> uniq(parts.begin(), parts.end());
    CHECK(uniq.size() == parts.size());
    for (const auto& p : parts) CHECK(p.covers_exactly(Coalition::full(k)));
  }
  CHECK(enumerate_partitions(1).front() == Partition::singletons(1));
  CHECK_THROWS(enumerate_partitions(9));
}

TEST_CASE("restricted-growth order") {
  const auto parts = enumerate_partitions(3);
  CHECK(parts.front() == Partition::grand(3));
  CHECK(parts.back() == Partition::singletons(3));
  const std::vector<int> rgs{0, 1, 0};
  CHECK(Partition::from_rgs(rgs) == Partition({Coalition{0, 2}, Coalition{1}}));
}

TEST_CASE("partition invariants") {
  CHECK_THROWS(Partition({Coalition{0, 1}, Coalition{1, 2}}));
  CHECK_THROWS(Partition({Coalition{}}));
  const Partition p({Coalition{2, 3}, Coalition{0}, Coalition{1}});
  CHECK(p.coalitions().front() == Coalition{0});
  CHECK(p.coalition_of(3) == Coalition{2, 3});
  CHECK_THROWS(p.coalition_of(4));
  const auto q = p.with_formed(Coalition{1, 3});
  CHECK(q == Partition({Coalition{0}, Coalition{1, 3}, Coalition{2}}));
  CHECK(p.to_string() == "[{0},{1},{2,3}]");
}

TEST_CASE("profitable transitions") {
  const auto t = three_client_transition_table();
  const auto single = CooperativeState::make(Partition::singletons(3), t);
  CHECK(is_profitable_transition(Coalition{0, 1}, single, t) == Transition::kStrict);
  CHECK(is_profitable_transition(Coalition{0}, single, t) == Transition::kNone);

  const auto zero = zero_table(3);
  const auto zs = CooperativeState::make(Partition::singletons(3), zero);
  CHECK(is_profitable_transition(Coalition{0, 1, 2}, zs, zero) == Transition::kWeak);

  auto neg = zero_table(3);
  for (auto s : all_coalitions(3)) {
    if (s.size() > 1) {
      for (int m : s.members()) neg.set(s, m, -0.25);
    }
  }
  const auto ns = CooperativeState::make(Partition::singletons(3), neg);
  for (auto s : all_coalitions(3)) {
    if (s.size() > 1) CHECK(is_profitable_transition(s, ns, neg) == Transition::kNone);
  }
}

TEST_CASE("equilibrium checks on the degenerate tables") {
  const auto zero = zero_table(4);
  CHECK(is_equilibrium(CooperativeState::make(Partition::singletons(4), zero), zero));

  const auto grand = grand_dominant_table(4);
  const auto eq = brute_force_equilibria(grand, 4);
  REQUIRE(eq.size() == 1);
  CHECK(eq.front() == Partition::grand(4));
  CHECK(brute_force_equilibria(grand_dominant_table(3), 3) == std::vector<Partition>{Partition::grand(3)});

  CHECK(brute_force_equilibria(zero_table(1), 1) == std::vector<Partition>{Partition::singletons(1)});
}

TEST_CASE("three-client transition story") {
  const auto t = three_client_transition_table();
  const Partition target({Coalition{0}, Coalition{1, 2}});
  CHECK(brute_force_equilibria(t, 3) == std::vector<Partition>{target});

  std::vector<Coalition> formed;
  MergeBlockingOptions opts;
  opts.on_transition = [&](Coalition s, const Partition&, const Partition&) { formed.push_back(s); };
  const auto set = all_coalitions(3);
  const auto r = merge_blocking(t, Partition::singletons(3), set, opts);
  CHECK(r.converged);
  CHECK(r.partition == target);
  REQUIRE(formed.size() >= 3);
  CHECK(formed[0] == Coalition{0, 1});
  CHECK(formed[1] == Coalition{0, 2});
  CHECK(formed[2] == Coalition{1, 2});
}

TEST_CASE("is_equilibrium agrees with an exhaustive blocking scan") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = random_uniform_table(4, rng());
    for (const auto& p : enumerate_partitions(4)) {
      CHECK(is_equilibrium(CooperativeState::make(p, t), t) == naive_is_equilibrium(masks_of(p.coalitions()), t));
    }
  }
}

TEST_CASE("brute force matches the naive enumeration and the serial reference") {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 5;
    const auto t = trial % 2 ? random_uniform_table(k, rng()) : random_affinity_table(k, 6, 0.8, rng());
    const auto fast = brute_force_equilibria(t, k);
    CHECK(fast == brute_force_equilibria_serial(t, k));
    std::set<std::vector<std::uint32_t>> expect;
    for (const auto& p : naive_partitions(k)) {
      if (naive_is_equilibrium(p, t)) expect.insert(p);
    }
    std::set<std::vector<std::uint32_t>> got;
    for (const auto& p : fast) got.insert(sorted_masks(p));
    CHECK(got == expect);
  }
}

TEST_CASE("merge-blocking fixtures") {
  const auto zero = zero_table(5);
  const auto rz = merge_blocking(zero, Partition::singletons(5));
  CHECK(rz.converged);
  CHECK(rz.partition == Partition::singletons(5));
  CHECK(rz.transitions == 0);

  for (int k : {2, 3, 5, 8}) {
    const auto rg = merge_blocking(grand_dominant_table(k), Partition::singletons(k));
    CHECK(rg.converged);
    CHECK(rg.partition == Partition::grand(k));
    CHECK(rg.traversal_rounds <= 2);
  }
}

TEST_CASE("merge-blocking transitions are strict improvements and the result is deterministic") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 3 + trial % 4;
    const auto t = random_affinity_table(k, 5, 0.8, rng());
    bool monotone = true;
    MergeBlockingOptions opts;
    opts.on_transition = [&](Coalition s, const Partition& before, const Partition& after) {
      const auto ub = CooperativeState::make(before, t).benefits;
      const auto ua = CooperativeState::make(after, t).benefits;
      bool strict = false;
      for (int m : s.members()) {
        const auto i = static_cast<std::size_t>(m);
        if (!(ua[i] > ub[i] - kBenefitSlack)) monotone = false;
        if (ua[i] > ub[i]) strict = true;
      }
      if (!strict || !after.contains(s)) monotone = false;
    };
    const auto set = all_coalitions(k);
    const auto a = merge_blocking(t, Partition::singletons(k), set, opts);
    CHECK(monotone);
    CHECK(a == merge_blocking(t, Partition::singletons(k), set, opts));
    CHECK(a.partition.covers_exactly(Coalition::full(k)));
    if (a.converged) CHECK(restricted_sound(a, t));
  }
}

TEST_CASE("stable coalitions are disjoint and part of the output") {
  const auto t = random_affinity_table(7, 8, 0.8, 31);
  const auto r = merge_blocking(t, Partition::singletons(7));
  Coalition seen;
  for (auto s : r.stable_coalitions) {
    CHECK_FALSE(seen.intersects(s));
    seen = seen.with(s);
    CHECK(r.partition.contains(s));
  }
}

TEST_CASE("a pass cap yields a non-converged result") {
  const auto t = three_client_transition_table();
  MergeBlockingOptions opts;
  opts.max_passes = 1;
  const auto set = all_coalitions(3);
  const auto r = merge_blocking(t, Partition::singletons(3), set, opts);
  CHECK_FALSE(r.converged);
  CHECK(r.traversal_rounds == 1);
}

TEST_CASE("dynamic evolution") {
  const auto t = random_affinity_table(6, 8, 0.8, 12);
  const auto r0 = dynamic_evolution(0, nullptr, t);
  CHECK(r0 == merge_blocking(t, Partition::singletons(6)));
  REQUIRE(r0.converged);

  // unchanged table: the previous equilibrium is a fixpoint
  const auto r1 = dynamic_evolution(1, &r0, t);
  CHECK(r1.partition == r0.partition);
  CHECK(r1.transitions == 0);

  // perturb so some coalition outside the equilibrium blocks it
  auto moved = t;
  Coalition blocker;
  for (auto s : all_coalitions(6)) {
    if (s.size() >= 2 && !r0.partition.contains(s)) {
      blocker = s;
      break;
    }
  }
  REQUIRE_FALSE(blocker.empty());
  for (int m : blocker.members()) moved.set(blocker, m, 5.0);
  const auto r2 = dynamic_evolution(2, &r0, moved);
  CHECK(r2.partition != r0.partition);
  CHECK(r2.converged);
  CHECK(is_equilibrium(CooperativeState::make(r2.partition, moved), moved));
  CHECK(r2.partition.contains(blocker));
}

TEST_CASE("dynamic evolution from an affinity graph") {
  const auto g = build_affinity_graph(random_snapshots(5, 6, 3), 0.8);
  const auto step = dynamic_evolution(0, nullptr, g);
  CHECK(step.table == build_benefit_table(g));
  const auto again = dynamic_evolution(1, &step.result, g);
  CHECK(again.result.partition == step.result.partition);
}

// Tables on which merge-blocking stops at a partition that a coalition
// spanning two frozen stable coalitions still blocks. Their outputs are pinned.
TEST_CASE("stored disagreement cases replay identically") {
  namespace fs = std::filesystem;
  int replayed = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(DCFCL_FIXTURE_DIR) / "regressions")) {
    std::ifstream in(entry.path());
    const auto doc = nlohmann::json::parse(in);
    const auto table = table_from_json(doc.at("table"));
    const int k = table.num_clients();
    const auto r = merge_blocking(table, Partition::singletons(k));
    INFO(entry.path().filename().string());
    CHECK(equilibrium_to_json(r) == doc.at("merge_blocking"));
    CHECK(restricted_sound(r, table));
    CHECK_FALSE(is_equilibrium(CooperativeState::make(r.partition, table), table));
    const auto eq = brute_force_equilibria(table, k);
    CHECK(std::find(eq.begin(), eq.end(), r.partition) == eq.end());
    CHECK(eq.size() == doc.at("oracle_equilibria").size());
    ++replayed;
  }
  CHECK(replayed == 8);
}
