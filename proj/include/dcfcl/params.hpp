#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcfcl {

/// Norms below this are treated as a zero vector (untrained or converged update).
inline constexpr double kNormTolerance = 1e-12;

class DimensionMismatch : public std::invalid_argument {
 public:
  DimensionMismatch(std::size_t lhs, std::size_t rhs)
      : std::invalid_argument("dimension mismatch: " + std::to_string(lhs) +
                              " vs " + std::to_string(rhs)) {}
};

/// All model parameters of one client, canonical flattened order.
struct FlatParams {
  std::vector<double> values;

  FlatParams() = default;
  explicit FlatParams(std::size_t dim) : values(dim, 0.0) {}
  explicit FlatParams(std::vector<double> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  std::span<const double> span() const { return values; }
  bool all_finite() const;

  friend bool operator==(const FlatParams&, const FlatParams&) = default;
};

/// Realized local update: parameters after local training minus parameters
/// at the last aggregation.
struct GradientProxy {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  std::span<const double> span() const { return values; }

  friend bool operator==(const GradientProxy&, const GradientProxy&) = default;
};

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;
};

double dot(std::span<const double> u, std::span<const double> v);
double norm(std::span<const double> u);

/// <u,v>/(|u||v|); 0 with degenerate=true when either norm is below kNormTolerance.
CosineResult cosine_checked(std::span<const double> u, std::span<const double> v);
inline double cosine(std::span<const double> u, std::span<const double> v) {
  return cosine_checked(u, v).value;
}

GradientProxy delta(const FlatParams& theta_new, const FlatParams& theta_old);

/// Sample-weighted mean: sum_p (n_p / sum_q n_q) * params_p.
FlatParams weighted_average(std::span<const FlatParams> params,
                            std::span<const std::int64_t> sample_counts);

/// Same weighting over raw spans; used for gradient proxies as well.
std::vector<double> weighted_average(std::span<const std::span<const double>> vectors,
                                     std::span<const std::int64_t> sample_counts);

}  // namespace dcfcl
