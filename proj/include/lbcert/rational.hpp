#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lbcert {

// Exact non-negative fraction, always stored reduced. Ones-ratio thresholds
// live here; floating point never enters an accept/reject decision.
class Rational {
 public:
  constexpr Rational() = default;

  constexpr Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ <= 0) throw std::invalid_argument("rational denominator must be positive");
    if (num_ < 0) throw std::invalid_argument("rational numerator must be non-negative");
    const auto g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  constexpr std::int64_t num() const { return num_; }
  constexpr std::int64_t den() const { return den_; }

  // Parses "N/D" or a bare integer "N".
  static Rational parse(std::string_view text) {
    auto to_int = [&](std::string_view s) -> std::int64_t {
      if (s.empty() || s.size() > 18) throw std::invalid_argument("bad rational '" + std::string(text) + "'");
      std::int64_t v = 0;
      for (char ch : s) {
        if (ch < '0' || ch > '9') throw std::invalid_argument("bad rational '" + std::string(text) + "'");
        v = v * 10 + (ch - '0');
      }
      return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(to_int(text), 1);
    return Rational(to_int(text.substr(0, slash)), to_int(text.substr(slash + 1)));
  }

  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend constexpr bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend constexpr std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
    const __int128 d = static_cast<__int128>(a.den_) * b.den_;
    if (n > INT64_MAX || d > INT64_MAX) throw std::overflow_error("rational overflow");
    return Rational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
  }

  // weight/length >= *this, without constructing a Rational.
  constexpr bool ratio_at_least(std::int64_t weight, std::int64_t length) const {
    return static_cast<__int128>(weight) * den_ >= static_cast<__int128>(num_) * length;
  }

  // floor(l / *this): the deepest depth d with l/d >= *this.
  constexpr std::int64_t depth_cap(std::int64_t level) const {
    if (num_ == 0) throw std::domain_error("depth cap undefined for zero ratio");
    return static_cast<std::int64_t>(static_cast<__int128>(level) * den_ / num_);
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace lbcert
