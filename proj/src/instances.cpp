#include "dcfcl/instances.hpp"

#include <random>

namespace dcfcl {

std::vector<ClientSnapshot> random_snapshots(int k, int dim, std::uint64_t seed,
                                             std::int64_t max_samples) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> count(1, max_samples);
  std::vector<ClientSnapshot> out(static_cast<std::size_t>(k));
  for (auto& c : out) {
    c.theta.values.resize(static_cast<std::size_t>(dim));
    c.grad.values.resize(static_cast<std::size_t>(dim));
    for (auto& v : c.theta.values) v = gauss(rng);
    for (auto& v : c.grad.values) v = gauss(rng);
    c.samples = count(rng);
  }
  return out;
}

BenefitTable random_affinity_table(int k, int dim, double epsilon, std::uint64_t seed) {
  const auto snaps = random_snapshots(k, dim, seed);
  return build_benefit_table(build_affinity_graph(snaps, epsilon));
}

BenefitTable random_uniform_table(int k, std::uint64_t seed, double lo, double hi,
                                  bool symmetric_pairs) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  BenefitTable t(k);
  for (Coalition s : all_coalitions(k)) {
    t.mark_present(s);
    if (s.size() == 1) continue;
    if (s.size() == 2 && symmetric_pairs) {
      const double v = u(rng);
      for (int m : s.members()) t.set(s, m, v);
      continue;
    }
    for (int m : s.members()) t.set(s, m, u(rng));
  }
  return t;
}

BenefitTable zero_table(int k) {
  BenefitTable t(k);
  for (Coalition s : all_coalitions(k)) t.mark_present(s);
  return t;
}

BenefitTable grand_dominant_table(int k) {
  BenefitTable t(k);
  const Coalition grand = Coalition::full(k);
  for (Coalition s : all_coalitions(k)) {
    t.mark_present(s);
    if (s.size() == 1) continue;
    const double v = s == grand ? 1.0 : 0.9 * (s.size() - 1) / (k - 1);
    for (int m : s.members()) t.set(s, m, v);
  }
  return t;
}

BenefitTable three_client_transition_table() {
  BenefitTable t = zero_table(3);
  t.set({0, 1}, 0, 0.5);
  t.set({0, 1}, 1, 0.4);
  t.set({0, 2}, 0, 0.6);
  t.set({0, 2}, 2, 0.3);
  t.set({1, 2}, 1, 0.7);
  t.set({1, 2}, 2, 0.5);
  for (int m = 0; m < 3; ++m) t.set({0, 1, 2}, m, 0.2);
  return t;
}

}  // namespace dcfcl
