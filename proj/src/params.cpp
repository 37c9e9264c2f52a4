#include "dcfcl/params.hpp"

#include <cmath>
#include <numeric>

namespace dcfcl {

bool FlatParams::all_finite() const {
  for (double x : values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionMismatch(u.size(), v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

CosineResult cosine_checked(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionMismatch(u.size(), v.size());
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu < kNormTolerance || nv < kNormTolerance) return {0.0, true};
  double c = dot(u, v) / (nu * nv);
  // rounding can push |c| a hair past 1
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return {c, false};
}

GradientProxy delta(const FlatParams& theta_new, const FlatParams& theta_old) {
  if (theta_new.dim() != theta_old.dim()) {
    throw DimensionMismatch(theta_new.dim(), theta_old.dim());
  }
  GradientProxy g;
  g.values.resize(theta_new.dim());
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = theta_new.values[i] - theta_old.values[i];
  }
  return g;
}

std::vector<double> weighted_average(std::span<const std::span<const double>> vectors,
                                     std::span<const std::int64_t> sample_counts) {
  if (vectors.empty()) throw std::invalid_argument("weighted_average: empty input");
  if (vectors.size() != sample_counts.size()) {
    throw std::invalid_argument("weighted_average: params/counts length mismatch");
  }
  std::int64_t total = 0;
  for (auto n : sample_counts) {
    if (n < 1) throw std::invalid_argument("weighted_average: sample count must be >= 1");
    total += n;
  }
  const std::size_t dim = vectors.front().size();
  std::vector<double> out(dim, 0.0);
  for (std::size_t p = 0; p < vectors.size(); ++p) {
    if (vectors[p].size() != dim) throw DimensionMismatch(dim, vectors[p].size());
    const double alpha = static_cast<double>(sample_counts[p]) / static_cast<double>(total);
    for (std::size_t i = 0; i < dim; ++i) out[i] += alpha * vectors[p][i];
  }
  return out;
}

FlatParams weighted_average(std::span<const FlatParams> params,
                            std::span<const std::int64_t> sample_counts) {
  std::vector<std::span<const double>> views;
  views.reserve(params.size());
  for (const auto& p : params) views.push_back(p.span());
  return FlatParams(weighted_average(views, sample_counts));
}

}  // namespace dcfcl
