#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcfcl {

/// Largest client count a bitmask coalition can address.
inline constexpr int kMaxClients = 30;

/// Nonempty set of client ids, stored as a bitmask. Ordering is
/// lexicographic over the sorted member lists.
class Coalition {
 public:
  using Mask = std::uint32_t;

  constexpr Coalition() = default;
  constexpr explicit Coalition(Mask mask) : mask_(mask) {}
  Coalition(std::initializer_list<int> members) : Coalition(std::span<const int>(members.begin(), members.size())) {}
  explicit Coalition(std::span<const int> members) {
    for (int m : members) {
      if (m < 0 || m >= kMaxClients) throw std::out_of_range("Coalition: client id out of range");
      if (mask_ & (Mask{1} << m)) throw std::invalid_argument("Coalition: duplicate member");
      mask_ |= Mask{1} << m;
    }
  }

  static constexpr Coalition singleton(int i) { return Coalition(Mask{1} << i); }
  static constexpr Coalition full(int k) {
    return Coalition(k >= 32 ? ~Mask{0} : (Mask{1} << k) - 1);
  }

  constexpr Mask mask() const { return mask_; }
  constexpr int size() const { return std::popcount(mask_); }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr bool contains(int i) const { return (mask_ >> i) & 1u; }
  constexpr bool intersects(Coalition o) const { return (mask_ & o.mask_) != 0; }
  constexpr bool subset_of(Coalition o) const { return (mask_ & ~o.mask_) == 0; }
  constexpr Coalition without(int i) const { return Coalition(mask_ & ~(Mask{1} << i)); }
  constexpr Coalition minus(Coalition o) const { return Coalition(mask_ & ~o.mask_); }
  constexpr Coalition with(Coalition o) const { return Coalition(mask_ | o.mask_); }
  constexpr int min_member() const { return std::countr_zero(mask_); }

  /// Position of member i among the sorted members.
  constexpr int rank_of(int i) const { return std::popcount(mask_ & ((Mask{1} << i) - 1)); }

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (Mask m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
    return out;
  }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int m : members()) {
      if (!first) s += ",";
      s += std::to_string(m);
      first = false;
    }
    return s + "}";
  }

  friend constexpr bool operator==(Coalition a, Coalition b) { return a.mask_ == b.mask_; }

  friend constexpr std::strong_ordering operator<=>(Coalition a, Coalition b) {
    Mask x = a.mask_;
    Mask y = b.mask_;
    while (x != 0 && y != 0) {
      const int ex = std::countr_zero(x);
      const int ey = std::countr_zero(y);
      if (ex != ey) return ex <=> ey;
      x &= x - 1;
      y &= y - 1;
    }
    if (x == 0 && y == 0) return std::strong_ordering::equal;
    return x == 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  }

 private:
  Mask mask_ = 0;
};

/// Size-ascending, then lexicographic.
struct BySizeThenLex {
  constexpr bool operator()(Coalition a, Coalition b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

/// Every nonempty subset of {0..k-1}, size-ascending then lexicographic.
std::vector<Coalition> all_coalitions(int k);

/// Every nonempty subset of `clients`, same order.
std::vector<Coalition> all_subcoalitions(Coalition clients);

}  // namespace dcfcl
