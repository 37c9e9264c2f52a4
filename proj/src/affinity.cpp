#include "dcfcl/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dcfcl {

std::vector<Coalition> all_subcoalitions(Coalition clients) {
  std::vector<Coalition> out;
  const Coalition::Mask full = clients.mask();
  // enumerate submasks
  for (Coalition::Mask m = full; m != 0; m = (m - 1) & full) out.emplace_back(m);
  std::sort(out.begin(), out.end(), BySizeThenLex{});
  return out;
}

std::vector<Coalition> all_coalitions(int k) {
  if (k < 0 || k > kMaxClients) throw std::invalid_argument("all_coalitions: bad client count");
  if (k == 0) return {};
  return all_subcoalitions(Coalition::full(k));
}

AffinityGraph build_affinity_graph(std::span<const ClientSnapshot> clients, double epsilon) {
  const int k = static_cast<int>(clients.size());
  AffinityGraph g;
  g.num_clients = k;
  g.epsilon = epsilon;
  g.a.assign(static_cast<std::size_t>(k) * k, 0.0);
  g.b.assign(static_cast<std::size_t>(k) * k, 0.0);
  g.g_norms.resize(static_cast<std::size_t>(k));
  g.theta_norms.resize(static_cast<std::size_t>(k));
  g.sample_counts.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto& c = clients[static_cast<std::size_t>(i)];
    if (c.samples < 1) throw std::invalid_argument("client sample count must be >= 1");
    if (c.theta.dim() != clients[0].theta.dim()) throw DimensionMismatch(c.theta.dim(), clients[0].theta.dim());
    if (c.grad.dim() != c.theta.dim()) throw DimensionMismatch(c.grad.dim(), c.theta.dim());
    g.g_norms[static_cast<std::size_t>(i)] = norm(c.grad.span());
    g.theta_norms[static_cast<std::size_t>(i)] = norm(c.theta.span());
    g.sample_counts[static_cast<std::size_t>(i)] = c.samples;
  }
  // upper triangle, parallel over rows
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      const auto& ci = clients[static_cast<std::size_t>(i)];
      const auto& cj = clients[static_cast<std::size_t>(j)];
      const double aij = cosine(ci.grad.span(), cj.grad.span());
      const double bij = cosine(ci.theta.span(), cj.theta.span());
      g.a[static_cast<std::size_t>(i) * k + j] = g.a[static_cast<std::size_t>(j) * k + i] = aij;
      g.b[static_cast<std::size_t>(i) * k + j] = g.b[static_cast<std::size_t>(j) * k + i] = bij;
    }
  }
  return g;
}

double pairwise_benefit(int i, int j, const AffinityGraph& graph) {
  return graph.grad_cos(i, j) + graph.epsilon * graph.model_cos(i, j);
}

namespace {

// Cosine between sum_p alpha_p v_p and v_i, from pairwise cosines and norms.
double aggregate_cosine(int i, Coalition peers, const std::vector<double>& cos,
                        const std::vector<double>& norms, std::span<const double> alpha, int k) {
  double num = 0.0;
  double rad = 0.0;
  int pi = 0;
  for (Coalition::Mask m = peers.mask(); m != 0; m &= m - 1, ++pi) {
    const int p = std::countr_zero(m);
    const double wp = alpha[static_cast<std::size_t>(pi)] * norms[static_cast<std::size_t>(p)];
    num += wp * cos[static_cast<std::size_t>(i) * k + p];
    rad += wp * wp;
    int qi = pi + 1;
    for (Coalition::Mask r = m & (m - 1); r != 0; r &= r - 1, ++qi) {
      const int q = std::countr_zero(r);
      const double wq = alpha[static_cast<std::size_t>(qi)] * norms[static_cast<std::size_t>(q)];
      rad += 2.0 * wp * wq * cos[static_cast<std::size_t>(p) * k + q];
    }
  }
  if (rad <= kNormTolerance * kNormTolerance) return 0.0;
  return num / std::sqrt(rad);
}

}  // namespace

BenefitParts coalition_benefit_parts(int i, Coalition s, const AffinityGraph& graph) {
  if (!s.contains(i)) throw std::invalid_argument("coalition_benefit: client not in coalition");
  if (s.size() == 1) return {};
  if (s.size() == 2) {
    const int j = s.without(i).min_member();
    return {graph.grad_cos(i, j), graph.model_cos(i, j)};
  }
  const Coalition peers = s.without(i);
  // at most kMaxClients peers
  double alpha[kMaxClients];
  std::int64_t total = 0;
  for (Coalition::Mask m = peers.mask(); m != 0; m &= m - 1) {
    total += graph.sample_counts[static_cast<std::size_t>(std::countr_zero(m))];
  }
  int n = 0;
  for (Coalition::Mask m = peers.mask(); m != 0; m &= m - 1) {
    alpha[n++] = static_cast<double>(graph.sample_counts[static_cast<std::size_t>(std::countr_zero(m))]) /
                 static_cast<double>(total);
  }
  const std::span<const double> w(alpha, static_cast<std::size_t>(n));
  return {aggregate_cosine(i, peers, graph.a, graph.g_norms, w, graph.num_clients),
          aggregate_cosine(i, peers, graph.b, graph.theta_norms, w, graph.num_clients)};
}

double coalition_benefit_closed(int i, Coalition s, const AffinityGraph& graph) {
  const auto parts = coalition_benefit_parts(i, s, graph);
  return parts.grad + graph.epsilon * parts.model;
}

double coalition_benefit_direct(int i, Coalition s, std::span<const ClientSnapshot> clients,
                                double epsilon) {
  if (!s.contains(i)) throw std::invalid_argument("coalition_benefit: client not in coalition");
  const auto& self = clients[static_cast<std::size_t>(i)];
  if (s.size() == 1) return 0.0;
  if (s.size() == 2) {
    const auto& other = clients[static_cast<std::size_t>(s.without(i).min_member())];
    return cosine(self.grad.span(), other.grad.span()) +
           epsilon * cosine(self.theta.span(), other.theta.span());
  }
  std::vector<std::span<const double>> gs, thetas;
  std::vector<std::int64_t> counts;
  for (int p : s.without(i).members()) {
    const auto& c = clients[static_cast<std::size_t>(p)];
    gs.push_back(c.grad.span());
    thetas.push_back(c.theta.span());
    counts.push_back(c.samples);
  }
  const auto g_avg = weighted_average(gs, counts);
  const auto theta_avg = weighted_average(thetas, counts);
  return cosine(g_avg, self.grad.span()) + epsilon * cosine(theta_avg, self.theta.span());
}

// ---------------------------------------------------------------------------

BenefitTable::BenefitTable(int num_clients) : num_clients_(num_clients) {
  if (num_clients < 0 || num_clients > kMaxTableClients) {
    throw std::invalid_argument("BenefitTable: client count must be in [0, " +
                                std::to_string(kMaxTableClients) + "]");
  }
  const std::size_t n = std::size_t{1} << num_clients;
  offsets_.resize(n);
  present_.assign(n, 0);
  std::size_t acc = 0;
  for (std::size_t m = 0; m < n; ++m) {
    offsets_[m] = acc;
    acc += static_cast<std::size_t>(std::popcount(static_cast<Coalition::Mask>(m)));
  }
  values_.assign(acc, 0.0);
}

void BenefitTable::check(Coalition s) const {
  if (s.empty() || !s.subset_of(Coalition::full(num_clients_))) {
    throw std::out_of_range("BenefitTable: coalition " + s.to_string() + " outside client set");
  }
}

double BenefitTable::at(Coalition s, int member) const {
  check(s);
  if (!has(s)) throw std::out_of_range("BenefitTable: coalition " + s.to_string() + " not present");
  if (!s.contains(member)) throw std::out_of_range("BenefitTable: client not in coalition");
  return values_[offset(s) + static_cast<std::size_t>(s.rank_of(member))];
}

void BenefitTable::set(Coalition s, int member, double value) {
  check(s);
  if (!s.contains(member)) throw std::out_of_range("BenefitTable: client not in coalition");
  present_[s.mask()] = 1;
  values_[offset(s) + static_cast<std::size_t>(s.rank_of(member))] = value;
}

std::span<const double> BenefitTable::benefits(Coalition s) const {
  check(s);
  return {values_.data() + offset(s), static_cast<std::size_t>(s.size())};
}

std::span<double> BenefitTable::benefits(Coalition s) {
  check(s);
  return {values_.data() + offset(s), static_cast<std::size_t>(s.size())};
}

std::vector<Coalition> BenefitTable::coalitions() const {
  std::vector<Coalition> out;
  for (std::size_t m = 1; m < present_.size(); ++m) {
    if (present_[m]) out.emplace_back(static_cast<Coalition::Mask>(m));
  }
  std::sort(out.begin(), out.end(), BySizeThenLex{});
  return out;
}

std::size_t BenefitTable::coalition_count() const {
  return static_cast<std::size_t>(std::count(present_.begin() + (present_.empty() ? 0 : 1), present_.end(), std::uint8_t{1}));
}

std::size_t BenefitTable::entry_count() const {
  std::size_t n = 0;
  for (std::size_t m = 1; m < present_.size(); ++m) {
    if (present_[m]) n += static_cast<std::size_t>(std::popcount(static_cast<Coalition::Mask>(m)));
  }
  return n;
}

bool BenefitTable::is_complete() const {
  return present_.empty() || coalition_count() == present_.size() - 1;
}

namespace {

void fill_coalition(BenefitTable& table, const AffinityGraph& graph, Coalition s) {
  auto out = table.benefits(s);
  int r = 0;
  for (Coalition::Mask m = s.mask(); m != 0; m &= m - 1) {
    out[static_cast<std::size_t>(r++)] = coalition_benefit_closed(std::countr_zero(m), s, graph);
  }
}

}  // namespace

BenefitTable build_benefit_table_serial(const AffinityGraph& graph,
                                        std::span<const Coalition> coalition_set) {
  BenefitTable table(graph.num_clients);
  for (Coalition s : coalition_set) {
    table.mark_present(s);
    fill_coalition(table, graph, s);
  }
  return table;
}

BenefitTable build_benefit_table(const AffinityGraph& graph, std::span<const Coalition> coalition_set) {
  BenefitTable table(graph.num_clients);
  for (Coalition s : coalition_set) table.mark_present(s);
  const auto n = static_cast<std::ptrdiff_t>(coalition_set.size());
  // each coalition owns a disjoint slice of the table
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    fill_coalition(table, graph, coalition_set[static_cast<std::size_t>(c)]);
  }
  return table;
}

BenefitTable build_benefit_table(const AffinityGraph& graph) {
  const auto all = all_coalitions(graph.num_clients);
  return build_benefit_table(graph, all);
}

}  // namespace dcfcl
