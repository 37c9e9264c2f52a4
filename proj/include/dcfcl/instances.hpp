#pragma once

#include <cstdint>
#include <vector>

#include "dcfcl/affinity.hpp"

namespace dcfcl {

/// Random client snapshots: Gaussian theta and update vectors, sample counts
/// uniform in [1, max_samples].
std::vector<ClientSnapshot> random_snapshots(int k, int dim, std::uint64_t seed,
                                             std::int64_t max_samples = 100);

/// Benefit table computed in closed form from random_snapshots.
BenefitTable random_affinity_table(int k, int dim, double epsilon, std::uint64_t seed);

/// Benefits drawn i.i.d. uniform in [lo, hi] for every multi-client entry;
/// singletons are 0. Optionally 2-client entries are symmetric.
BenefitTable random_uniform_table(int k, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                                  bool symmetric_pairs = true);

/// Every entry 0.
BenefitTable zero_table(int k);

/// Grand coalition worth 1 to everyone; any other multi-client coalition
/// worth 0.9 * (|S| - 1) / (K - 1) < 1.
BenefitTable grand_dominant_table(int k);

/// Three clients where {0,1} blocks the singletons, client 2 leaves {0,2}
/// for {1,2}, and {0},{1,2} is the unique equilibrium.
BenefitTable three_client_transition_table();

}  // namespace dcfcl
