#pragma once

// Exact arithmetic for the 3x+1 map: forward iteration and trajectory
// statistics over arbitrary-precision integers, the inverse maps, and the
// residue / ternary-codeword conversions the tree search runs on.

#include <algorithm>
#include <array>
#include <compare>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lbcert/rational.hpp"

namespace lbcert {

using Nat = boost::multiprecision::cpp_int;
using u128 = unsigned __int128;

inline constexpr int kMaxExponent = 80;

namespace detail {
constexpr std::array<u128, kMaxExponent + 1> make_pow3() {
  std::array<u128, kMaxExponent + 1> p{};
  p[0] = 1;
  for (int i = 1; i <= kMaxExponent; ++i) p[i] = p[i - 1] * 3;
  return p;
}
}  // namespace detail

inline constexpr auto kPow3 = detail::make_pow3();

constexpr u128 pow3(int e) {
  if (e < 0 || e > kMaxExponent) throw std::out_of_range("3^e out of supported range");
  return kPow3[static_cast<std::size_t>(e)];
}

inline std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

inline Nat to_nat(u128 v) {
  Nat n = static_cast<std::uint64_t>(v >> 64);
  n <<= 64;
  n += static_cast<std::uint64_t>(v);
  return n;
}

inline Nat parse_nat(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty integer");
  for (char ch : text)
    if (ch < '0' || ch > '9') throw std::invalid_argument("not a non-negative integer: '" + std::string(text) + "'");
  return Nat(std::string(text));
}

// ---------------------------------------------------------------------------
// Forward map

template <class Int>
bool is_odd(const Int& n) {
  if constexpr (std::is_integral_v<Int>) return (n & 1) != 0;
  else return boost::multiprecision::bit_test(n, 0);
}

// T(n) = n/2 for even n, (3n+1)/2 for odd n. Defined on n >= 1.
template <class Int>
Int t_map(const Int& n) {
  if (n == 0) throw std::domain_error("t_map: n must be positive");
  if (!is_odd(n)) return n / 2;
  if constexpr (std::is_integral_v<Int>) {
    if (n > (std::numeric_limits<Int>::max() - 1) / 3) throw std::overflow_error("t_map: fixed-width overflow");
  }
  return (3 * n + 1) / 2;
}

// T^(k)(n).
template <class Int>
Int t_iterate(Int n, std::int64_t k) {
  for (std::int64_t i = 0; i < k; ++i) n = t_map(n);
  return n;
}

struct StoppingTime {
  std::optional<std::int64_t> sigma;  // empty when the cap ran out first
  std::int64_t ones = 0;              // odd iterates seen among the first sigma steps
};

// Counts steps to reach 1 without recording parity; sigma(1) = 0.
template <class Int>
StoppingTime stopping_time(Int n, std::int64_t cap) {
  if (n == 0) throw std::domain_error("stopping_time: n must be positive");
  StoppingTime out;
  for (std::int64_t k = 0; k <= cap; ++k) {
    if (n == 1) {
      out.sigma = k;
      return out;
    }
    if (k == cap) break;
    if (is_odd(n)) ++out.ones;
    n = t_map(n);
  }
  return out;
}

inline double natural_log(const Nat& n) {
  if (n <= 0) throw std::domain_error("log of non-positive integer");
  const auto bits = boost::multiprecision::msb(n);
  if (bits < 60) return std::log(static_cast<double>(n));
  const auto shift = bits - 56;
  const Nat top = n >> shift;
  return std::log(static_cast<double>(top)) + static_cast<double>(shift) * std::log(2.0);
}

struct TrajectoryReport {
  Nat n;
  std::optional<std::int64_t> sigma_infinity;
  std::string parity;  // '0'/'1' per step, length sigma_infinity when defined
  std::optional<Rational> ones_ratio;
  std::optional<double> gamma;
};

inline constexpr std::int64_t kDefaultTrajectoryCap = 100000;

inline TrajectoryReport trajectory(const Nat& n, std::int64_t cap = kDefaultTrajectoryCap) {
  if (n < 1) throw std::domain_error("trajectory: n must be positive");
  if (cap < 1) throw std::invalid_argument("trajectory: cap must be >= 1");
  TrajectoryReport r;
  r.n = n;
  Nat x = n;
  std::int64_t ones = 0;
  for (std::int64_t k = 0; k <= cap; ++k) {
    if (x == 1) {
      r.sigma_infinity = k;
      break;
    }
    if (k == cap) break;
    const bool odd = is_odd(x);
    r.parity.push_back(odd ? '1' : '0');
    ones += odd;
    x = t_map(x);
  }
  if (!r.sigma_infinity) {
    r.parity.clear();
    return r;
  }
  if (*r.sigma_infinity > 0) {
    r.ones_ratio = Rational(ones, *r.sigma_infinity);
    r.gamma = static_cast<double>(*r.sigma_infinity) / natural_log(n);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Inverse maps

// All m with T(m) = n.
inline std::vector<Nat> inverse_t(const Nat& n) {
  if (n < 1) throw std::domain_error("inverse_t: n must be positive");
  std::vector<Nat> out{2 * n};
  if (n % 3 == 2) out.push_back((2 * n - 1) / 3);
  return out;
}

// A residue class value mod 3^exponent.
struct Residue {
  u128 value = 0;
  int exponent = 1;

  Residue() = default;
  Residue(u128 v, int m) : value(v), exponent(m) {
    if (m < 1 || m > kMaxExponent) throw std::out_of_range("residue exponent out of range");
    if (v >= pow3(m)) throw std::out_of_range("residue value not reduced");
  }

  u128 modulus() const { return kPow3[static_cast<std::size_t>(exponent)]; }
  unsigned mod9() const { return static_cast<unsigned>(value % 9); }
  bool can_branch() const {
    if (exponent < 2) return false;
    const auto r = mod9();
    return r == 2 || r == 8;
  }

  friend bool operator==(const Residue&, const Residue&) = default;
};

// Child along a 0-edge: 2n mod 3^m.
inline Residue zero_child(const Residue& r) {
  const u128 mod = r.modulus();
  u128 v = r.value * 2;
  if (v >= mod) v -= mod;
  Residue c;
  c.value = v;
  c.exponent = r.exponent;
  return c;
}

// Child along a 1-edge: (2n-1)/3 mod 3^(m-1). Caller checks can_branch().
inline Residue one_child(const Residue& r) {
  const u128 mod = kPow3[static_cast<std::size_t>(r.exponent - 1)];
  u128 v = (r.value * 2 - 1) / 3;
  if (v >= mod) v -= mod;
  Residue c;
  c.value = v;
  c.exponent = r.exponent - 1;
  return c;
}

struct ResidueEdge {
  int label;  // 0 or 1
  Residue child;
};

// Pruned inverse map on a residue class: children never fall in 0 mod 3.
inline std::vector<ResidueEdge> inverse_t_star_residue(const Residue& node) {
  if (node.exponent < 2) throw std::domain_error("residue too coarse to branch");
  if (node.value % 3 == 0) throw std::domain_error("residue is 0 mod 3");
  std::vector<ResidueEdge> out{{0, zero_child(node)}};
  if (node.can_branch()) out.push_back({1, one_child(node)});
  return out;
}

// ---------------------------------------------------------------------------
// Ternary codewords

// Digits (c_0, c_1, ..., c_l), naming a = sum c_j 3^j mod 3^(l+1).
class Codeword {
 public:
  Codeword() = default;

  explicit Codeword(std::vector<std::uint8_t> digits) : digits_(std::move(digits)) {
    if (digits_.empty()) throw std::invalid_argument("codeword must be non-empty");
    if (static_cast<int>(digits_.size()) > kMaxExponent)
      throw std::invalid_argument("codeword longer than " + std::to_string(kMaxExponent));
    for (auto d : digits_)
      if (d > 2) throw std::invalid_argument("codeword digit outside {0,1,2}");
  }
  Codeword(std::initializer_list<int> digits) : Codeword(to_digits(digits)) {}

  // Most-significant-digit-first text, as in printed certificate tables.
  static Codeword from_display(std::string_view text) {
    std::vector<std::uint8_t> d;
    d.reserve(text.size());
    for (auto it = text.rbegin(); it != text.rend(); ++it) {
      if (*it < '0' || *it > '2') throw std::invalid_argument("codeword digit outside {0,1,2}: '" + std::string(text) + "'");
      d.push_back(static_cast<std::uint8_t>(*it - '0'));
    }
    return Codeword(std::move(d));
  }

  // Low `length` ternary digits of a.
  static Codeword of_integer(const Nat& a, int length) {
    std::vector<std::uint8_t> d;
    Nat x = a;
    for (int i = 0; i < length; ++i) {
      d.push_back(static_cast<std::uint8_t>(static_cast<unsigned>(x % 3)));
      x /= 3;
    }
    return Codeword(std::move(d));
  }

  static Codeword reserved() { return Codeword(std::vector<std::uint8_t>{0}); }

  const std::vector<std::uint8_t>& digits() const { return digits_; }
  std::size_t length() const { return digits_.size(); }
  int level() const { return static_cast<int>(digits_.size()) - 1; }
  std::uint8_t operator[](std::size_t i) const { return digits_[i]; }

  // Roots of the search tree have c_0 in {1,2}.
  bool is_root_class() const { return !digits_.empty() && digits_[0] != 0; }

  Residue residue() const {
    u128 v = 0;
    for (std::size_t j = digits_.size(); j-- > 0;) v = v * 3 + digits_[j];
    return Residue(v, static_cast<int>(digits_.size()));
  }

  std::string display() const {
    std::string s;
    s.reserve(digits_.size());
    for (auto it = digits_.rbegin(); it != digits_.rend(); ++it) s.push_back(static_cast<char>('0' + *it));
    return s;
  }

  Codeword extended(std::uint8_t digit) const {
    auto d = digits_;
    d.push_back(digit);
    return Codeword(std::move(d));
  }

  bool is_prefix_of(const Codeword& other) const {
    if (digits_.size() > other.digits_.size()) return false;
    return std::equal(digits_.begin(), digits_.end(), other.digits_.begin());
  }

  // Canonical order: lexicographic on (c_0, c_1, ...), a prefix before its
  // extensions. This is depth-first preorder of the splitting tree.
  friend auto operator<=>(const Codeword& a, const Codeword& b) { return a.digits_ <=> b.digits_; }
  friend bool operator==(const Codeword&, const Codeword&) = default;

 private:
  static std::vector<std::uint8_t> to_digits(std::initializer_list<int> digits) {
    std::vector<std::uint8_t> d;
    for (int x : digits) {
      if (x < 0 || x > 2) throw std::invalid_argument("codeword digit outside {0,1,2}");
      d.push_back(static_cast<std::uint8_t>(x));
    }
    return d;
  }

  std::vector<std::uint8_t> digits_;
};

}  // namespace lbcert
