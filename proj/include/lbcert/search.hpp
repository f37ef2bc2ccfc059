#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbcert/certificate.hpp"
#include "lbcert/engine.hpp"
#include "lbcert/numth.hpp"
#include "lbcert/rational.hpp"

namespace lbcert {

// Greedy certificate search for ratio alpha with codewords of level at most
// max_weight. All tree growth goes through the engine.
inline SearchOutcome search(const Rational& alpha, int max_weight, Mode mode, int workers = 1) {
  EngineOptions opts;
  opts.workers = workers;
  return *run(alpha, max_weight, mode, opts).outcome;
}

inline bool closed(const SearchOutcome& o) { return std::holds_alternative<Certificate>(o); }

// ---------------------------------------------------------------------------
// Maximal alpha per level

inline const Rational kAlphaStep{1, 10000};
inline const Rational kLevelZeroAlpha{1, 6};
inline constexpr int kFareyOrder = 100;

struct MaxAlphaResult {
  int level = 0;
  Rational alpha_star;
  Certificate certificate;
  int searches = 0;

  // "alpha |C| max-weight max-depth", max-weight being the level searched.
  std::string row() const {
    return alpha_star.str() + " " + std::to_string(certificate.size()) + " " + std::to_string(level) + " " +
           std::to_string(certificate.max_depth());
  }
};

class SeedDoesNotClose : public std::runtime_error {
 public:
  SeedDoesNotClose(int level, const Rational& seed)
      : std::runtime_error("seed alpha " + seed.str() + " does not close at level " + std::to_string(level)) {}
};

// Starting from `seed`, alternates a search with the champion update
// alpha' = weakest path ratio of the certificate found, then retries at
// alpha' + 1/10000 until the search no longer closes within `level`.
inline MaxAlphaResult max_alpha_at_level(int level, const Rational& seed, Mode mode = Mode::plain, int workers = 1) {
  if (level < 1) throw std::invalid_argument("level must be >= 1");
  MaxAlphaResult r;
  r.level = level;
  auto first = search(seed, level, mode, workers);
  ++r.searches;
  if (!closed(first)) throw SeedDoesNotClose(level, seed);
  r.certificate = std::get<Certificate>(std::move(first));
  r.alpha_star = r.certificate.min_ratio();
  for (;;) {
    auto next = search(r.alpha_star + kAlphaStep, level, mode, workers);
    ++r.searches;
    if (!closed(next)) break;
    r.certificate = std::get<Certificate>(std::move(next));
    r.alpha_star = r.certificate.min_ratio();
  }
  // A step of 1/10000 cannot skip a fraction with denominator below 100.
  const int cap = r.alpha_star.depth_cap(level);
  if (r.alpha_star.den() > cap || cap >= kFareyOrder)
    throw std::logic_error("maximal alpha " + r.alpha_star.str() + " at level " + std::to_string(level) +
                           " has depth cap " + std::to_string(cap) + "; the 1/10000 step is exact only below 100");
  return r;
}

// Levels 1..top in sequence, each seeded with the previous level's value.
inline std::vector<MaxAlphaResult> max_alpha_sweep(int top, Mode mode = Mode::plain, int workers = 1,
                                                   const std::function<void(const MaxAlphaResult&)>& on_level = {}) {
  std::vector<MaxAlphaResult> out;
  Rational seed = kLevelZeroAlpha;
  for (int l = 1; l <= top; ++l) {
    out.push_back(max_alpha_at_level(l, seed, mode, workers));
    seed = out.back().alpha_star;
    if (on_level) on_level(out.back());
  }
  return out;
}

inline MaxAlphaResult max_alpha_at_level(int level, std::optional<Rational> seed, Mode mode = Mode::plain,
                                         int workers = 1) {
  if (seed) return max_alpha_at_level(level, *seed, mode, workers);
  return max_alpha_sweep(level, mode, workers).back();
}

// ---------------------------------------------------------------------------
// Witness integers

struct Witness {
  Nat n;
  std::int64_t k = 0;       // T^(k)(n) = anchor
  std::int64_t weight = 0;  // odd steps among those k
  std::string path;         // edge labels from the anchor down to n
  Rational ratio() const { return Rational(weight, k); }
};

struct WitnessChain {
  Nat requested_anchor;
  Nat anchor;  // the anchor actually used; differs for anchors on a cycle
  std::vector<Witness> witnesses;
};

// Does iterating T from a come back to a?
inline bool on_cycle(const Nat& a, std::int64_t cap = kDefaultTrajectoryCap) {
  Nat x = a;
  for (std::int64_t i = 0; i < cap; ++i) {
    x = t_map(x);
    if (x == a) return true;
    if (x == 1) return a == 2;  // 1 -> 2 -> 1
  }
  return false;
}

namespace detail {

class CertificateIndex {
 public:
  explicit CertificateIndex(const Certificate& cert) {
    for (const auto& e : cert.entries) {
      by_word_.emplace(e.codeword, &e);
      lengths_.insert(e.codeword.length());
    }
  }
  const CertificateEntry& match(const Nat& x) const {
    for (auto len : lengths_) {
      auto it = by_word_.find(Codeword::of_integer(x, static_cast<int>(len)));
      if (it != by_word_.end()) return *it->second;
    }
    throw std::logic_error("certificate has no codeword matching " + x.str() + " (not exhaustive)");
  }

 private:
  std::map<Codeword, const CertificateEntry*> by_word_;
  std::set<std::size_t> lengths_;
};

inline Nat lift(Nat x, const PathVector& p) {
  for (int i = 0; i < p.length(); ++i) {
    if (!p.bit(i)) {
      x *= 2;
      continue;
    }
    Nat y = 2 * x - 1;
    if (y % 3 != 0) throw std::logic_error("path edge " + std::to_string(i) + " cannot be lifted at " + x.str());
    x = y / 3;
  }
  return x;
}

inline void check_witness(const Witness& w, const Nat& anchor, const Rational& alpha) {
  Nat x = w.n;
  for (std::int64_t i = 0; i < w.k; ++i) {
    const char want = w.path[static_cast<std::size_t>(w.k - 1 - i)];
    if ((is_odd(x) ? '1' : '0') != want) throw std::logic_error("witness " + w.n.str() + ": parity does not match path");
    x = t_map(x);
  }
  if (x != anchor) throw std::logic_error("witness " + w.n.str() + " does not iterate to the anchor");
  if (!alpha.ratio_at_least(w.weight, w.k)) throw std::logic_error("witness " + w.n.str() + " ratio below alpha");
}

}  // namespace detail

// Builds the chain anchor <- n1 <- n2 <- ... of witnesses:
// each step matches the current integer's low ternary digits against the
// certificate and lifts the entry's path over the integers. With `branching`
// (strong certificates) every step uses both paths, so round j holds 2^j
// witnesses; results come in breadth-first order.
inline WitnessChain witnesses(const Certificate& cert, const Nat& anchor, std::size_t count, bool branching = false) {
  if (anchor < 1) throw std::domain_error("anchor must be positive");
  if (anchor % 3 == 0) throw std::domain_error("anchor is 0 mod 3");
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  if (branching && cert.mode != Mode::strong) throw std::invalid_argument("branching needs a strong certificate");

  WitnessChain chain;
  chain.requested_anchor = anchor;
  chain.anchor = anchor;
  if (anchor == 1) {
    chain.anchor = 41;
  } else if (on_cycle(anchor)) {
    bool escaped = false;
    for (const auto& pre : inverse_t(anchor)) {
      if (pre % 3 != 0 && !on_cycle(pre)) {
        chain.anchor = pre;
        escaped = true;
        break;
      }
    }
    if (!escaped) throw std::logic_error("no preimage of " + anchor.str() + " leaves its cycle");
  }

  const detail::CertificateIndex index(cert);
  std::deque<Witness> queue{Witness{chain.anchor, 0, 0, ""}};
  while (chain.witnesses.size() < count) {
    const Witness parent = std::move(queue.front());
    queue.pop_front();
    const auto& entry = index.match(parent.n);
    const std::size_t fan = branching ? entry.paths.size() : 1;
    for (std::size_t j = 0; j < fan && chain.witnesses.size() < count; ++j) {
      const auto& p = entry.paths[j];
      Witness w{detail::lift(parent.n, p), parent.k + p.length(), parent.weight + p.weight(), parent.path + p.str()};
      detail::check_witness(w, chain.anchor, cert.alpha);
      chain.witnesses.push_back(w);
      queue.push_back(std::move(w));
    }
  }
  return chain;
}

}  // namespace lbcert
