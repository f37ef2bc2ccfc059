#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lbcert/numth.hpp"
#include "lbcert/rational.hpp"

namespace lbcert {

// Edge labels from a root to a node, packed most-significant-bit first so
// that equal-length paths compare lexicographically as integers.
class PathVector {
 public:
  static constexpr int kCapacity = 128;

  PathVector() = default;

  static PathVector parse(std::string_view bits) {
    PathVector p;
    for (char ch : bits) {
      if (ch != '0' && ch != '1') throw std::invalid_argument("path bit outside {0,1}: '" + std::string(bits) + "'");
      p = p.appended(ch == '1');
    }
    return p;
  }

  int length() const { return length_; }
  int weight() const { return weight_; }
  bool empty() const { return length_ == 0; }

  bool bit(int i) const { return ((bits_ >> (kCapacity - 1 - i)) & 1) != 0; }
  bool last() const { return length_ > 0 && bit(length_ - 1); }

  PathVector appended(bool one) const {
    if (length_ >= kCapacity) throw std::length_error("path longer than 128 edges");
    PathVector p = *this;
    if (one) {
      p.bits_ |= u128{1} << (kCapacity - 1 - length_);
      ++p.weight_;
    }
    ++p.length_;
    return p;
  }

  PathVector concat(const PathVector& tail) const {
    PathVector p = *this;
    for (int i = 0; i < tail.length(); ++i) p = p.appended(tail.bit(i));
    return p;
  }

  PathVector reversed() const {
    PathVector p;
    for (int i = length_; i-- > 0;) p = p.appended(bit(i));
    return p;
  }

  Rational ones_ratio() const {
    if (length_ == 0) throw std::domain_error("ones-ratio of empty path");
    return Rational(weight_, length_);
  }

  bool is_prefix_of(const PathVector& other) const {
    if (length_ > other.length_) return false;
    if (length_ == 0) return true;
    const u128 mask = ~u128{0} << (kCapacity - length_);
    return (bits_ & mask) == (other.bits_ & mask);
  }

  std::string str() const {
    std::string s;
    s.reserve(static_cast<std::size_t>(length_));
    for (int i = 0; i < length_; ++i) s.push_back(bit(i) ? '1' : '0');
    return s;
  }

  // Shallower first, then lexicographic with 0 < 1.
  friend std::strong_ordering operator<=>(const PathVector& a, const PathVector& b) {
    if (auto c = a.length_ <=> b.length_; c != 0) return c;
    return a.bits_ <=> b.bits_;
  }
  friend bool operator==(const PathVector& a, const PathVector& b) {
    return a.length_ == b.length_ && a.bits_ == b.bits_;
  }

 private:
  u128 bits_ = 0;
  std::uint8_t length_ = 0;
  std::uint8_t weight_ = 0;
};

}  // namespace lbcert
