#include <doctest.h>

#include <cmath>
#include <random>

#include "dcfcl/affinity.hpp"
#include "dcfcl/instances.hpp"
#include "oracles.hpp"

using namespace dcfcl;
using namespace dcfcl::testing;

namespace {

ClientSnapshot snap(std::vector<double> theta, std::vector<double> grad, std::int64_t n = 1) {
  ClientSnapshot s;
  s.theta = FlatParams(std::move(theta));
  s.grad.values = std::move(grad);
  s.samples = n;
  return s;
}

}  // namespace

TEST_CASE("pairwise benefit") {
  std::vector<ClientSnapshot> same{snap({1, 2}, {3, -1}), snap({1, 2}, {3, -1})};
  const auto g = build_affinity_graph(same, 0.2);
  CHECK(pairwise_benefit(0, 1, g) == doctest::Approx(1.2));

  std::vector<ClientSnapshot> orth{snap({1, 0}, {0, 1}), snap({0, 1}, {1, 0})};
  CHECK(pairwise_benefit(0, 1, build_affinity_graph(orth, 0.8)) == doctest::Approx(0.0));

  const auto r = random_snapshots(2, 6, 3);
  const auto g0 = build_affinity_graph(r, 0.0);
  CHECK(pairwise_benefit(0, 1, g0) == g0.grad_cos(0, 1));
}

TEST_CASE("affinity graph is symmetric with a unit diagonal") {
  const auto snaps = random_snapshots(6, 10, 17);
  const auto g = build_affinity_graph(snaps, 0.5);
  for (int i = 0; i < 6; ++i) {
    CHECK(g.grad_cos(i, i) == doctest::Approx(1.0));
    CHECK(g.model_cos(i, i) == doctest::Approx(1.0));
    for (int j = 0; j < 6; ++j) {
      CHECK(g.grad_cos(i, j) == g.grad_cos(j, i));
      CHECK(g.model_cos(i, j) == g.model_cos(j, i));
      CHECK(std::abs(g.grad_cos(i, j)) <= 1.0);
      CHECK(g.grad_cos(i, j) == doctest::Approx(naive_cos(snaps[i].grad.values, snaps[j].grad.values)));
    }
  }
}

TEST_CASE("closed form special cases") {
  const auto snaps = random_snapshots(4, 5, 8);
  const auto g = build_affinity_graph(snaps, 0.8);
  for (int i = 0; i < 4; ++i) CHECK(coalition_benefit_closed(i, Coalition::singleton(i), g) == 0.0);
  CHECK(coalition_benefit_closed(1, Coalition{1, 3}, g) == doctest::Approx(pairwise_benefit(1, 3, g)));
  CHECK_THROWS(coalition_benefit_closed(0, Coalition{1, 2}, g));
}

TEST_CASE("closed form matches the naive aggregate-then-cosine oracle") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 3 + trial % 6;
    const int dim = 4 + trial % 13;
    const double eps = std::vector<double>{0.0, 0.2, 1.0}[static_cast<std::size_t>(trial % 3)];
    const auto snaps = random_snapshots(k, dim, rng());
    const auto g = build_affinity_graph(snaps, eps);
    for (auto s : all_coalitions(k)) {
      for (int i : s.members()) {
        const double closed = coalition_benefit_closed(i, s, g);
        CHECK(std::abs(closed - naive_benefit(i, s.mask(), snaps, eps)) < 1e-9);
        CHECK(std::abs(closed - coalition_benefit_direct(i, s, snaps, eps)) < 1e-9);
      }
    }
  }
}

TEST_CASE("identical peers give 1 + eps, orthogonal peers give 0") {
  std::vector<ClientSnapshot> same(4, snap({0.3, -2, 1}, {1, 1, 0}, 5));
  same[2].samples = 40;
  const auto g = build_affinity_graph(same, 0.6);
  CHECK(coalition_benefit_closed(0, Coalition{0, 1, 2, 3}, g) == doctest::Approx(1.6));
  CHECK(coalition_benefit_direct(0, Coalition{0, 1, 2, 3}, same, 0.6) == doctest::Approx(1.6));

  std::vector<ClientSnapshot> orth{snap({1, 0, 0}, {1, 0, 0}), snap({0, 1, 0}, {0, 1, 0}),
                                   snap({0, 0, 1}, {0, 0, 1})};
  const auto go = build_affinity_graph(orth, 0.9);
  CHECK(coalition_benefit_closed(0, Coalition{0, 1, 2}, go) == doctest::Approx(0.0));
  CHECK(coalition_benefit_direct(0, Coalition{0, 1, 2}, orth, 0.9) == doctest::Approx(0.0));
}

TEST_CASE("peers cancelling out give a degenerate aggregate read as 0") {
  std::vector<ClientSnapshot> c{snap({1, 1}, {1, 1}), snap({1, 0}, {1, 0}), snap({-1, 0}, {-1, 0})};
  const auto g = build_affinity_graph(c, 1.0);
  CHECK(coalition_benefit_closed(0, Coalition{0, 1, 2}, g) == 0.0);
  CHECK(coalition_benefit_direct(0, Coalition{0, 1, 2}, c, 1.0) == 0.0);
}

TEST_CASE("benefit is linear in eps and invariant to scaling a client's vectors") {
  const auto snaps = random_snapshots(5, 7, 2);
  const Coalition s{0, 2, 3, 4};
  const auto parts = coalition_benefit_parts(2, s, build_affinity_graph(snaps, 0.0));
  for (double eps : {0.0, 0.3, 1.7}) {
    CHECK(coalition_benefit_closed(2, s, build_affinity_graph(snaps, eps)) ==
          doctest::Approx(parts.grad + eps * parts.model));
  }
  auto scaled = snaps;
  for (auto& v : scaled[2].grad.values) v *= 13.0;
  for (auto& v : scaled[2].theta.values) v *= 0.01;
  CHECK(coalition_benefit_closed(2, s, build_affinity_graph(scaled, 0.8)) ==
        doctest::Approx(coalition_benefit_closed(2, s, build_affinity_graph(snaps, 0.8))));
}

TEST_CASE("benefit table shape") {
  const auto one = random_snapshots(1, 3, 1);
  const auto t1 = build_benefit_table(build_affinity_graph(one, 0.8));
  CHECK(t1.coalition_count() == 1);
  CHECK(t1.at(Coalition::singleton(0), 0) == 0.0);

  const auto t3 = build_benefit_table(build_affinity_graph(random_snapshots(3, 4, 2), 0.8));
  CHECK(t3.coalition_count() == 7);
  CHECK(t3.entry_count() == 12);
  CHECK(t3.is_complete());

  const auto t8 = build_benefit_table(build_affinity_graph(random_snapshots(8, 4, 2), 0.8));
  CHECK(t8.coalition_count() == 255);
  for (int i = 0; i < 8; ++i) CHECK(t8.at(Coalition::singleton(i), i) == 0.0);
}

TEST_CASE("table over a partial coalition set") {
  const auto g = build_affinity_graph(random_snapshots(4, 4, 6), 0.5);
  const std::vector<Coalition> set{Coalition{0}, Coalition{1}, Coalition{0, 1}, Coalition{1, 2, 3}};
  const auto t = build_benefit_table(g, set);
  CHECK(t.coalition_count() == 4);
  CHECK(t.has(Coalition{1, 2, 3}));
  CHECK_FALSE(t.has(Coalition{2, 3}));
  CHECK_FALSE(t.is_complete());
  CHECK_THROWS(t.at(Coalition{2, 3}, 2));
  CHECK_THROWS(t.at(Coalition{0, 1}, 3));
  const auto cs = t.coalitions();
  CHECK(cs == std::vector<Coalition>{Coalition{0}, Coalition{1}, Coalition{0, 1}, Coalition{1, 2, 3}});
}

TEST_CASE("parallel table build equals the serial reference") {
  for (int k : {1, 4, 9, 12}) {
    const auto g = build_affinity_graph(random_snapshots(k, 6, static_cast<std::uint64_t>(k)), 0.8);
    const auto set = all_coalitions(k);
    CHECK(build_benefit_table(g, set) == build_benefit_table_serial(g, set));
  }
}

TEST_CASE("coalition ordering") {
  CHECK(Coalition{0, 2} < Coalition{1});
  CHECK(Coalition{0} < Coalition{0, 1});
  CHECK(BySizeThenLex{}(Coalition{1}, Coalition{0, 2}));
  const auto all = all_coalitions(3);
  CHECK(all == std::vector<Coalition>{Coalition{0}, Coalition{1}, Coalition{2}, Coalition{0, 1},
                                      Coalition{0, 2}, Coalition{1, 2}, Coalition{0, 1, 2}});
  CHECK(all_subcoalitions(Coalition{1, 3}).size() == 3);
  CHECK(Coalition{1, 3, 4}.rank_of(4) == 2);
  CHECK_THROWS(Coalition({1, 1}));
}
