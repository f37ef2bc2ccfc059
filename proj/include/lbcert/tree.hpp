#pragma once

// Pruned 3x+1 trees grown over residue classes. The search only ever needs
// the current depth's frontier, so grow_critical keeps nothing else; the
// full-tree builders further down exist for structure comparison and for
// cross-checking residue growth against integer growth.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "lbcert/numth.hpp"
#include "lbcert/path.hpp"
#include "lbcert/rational.hpp"

namespace lbcert {

struct ResidueNode {
  Residue residue;
  PathVector path;

  int depth() const { return path.length(); }
  int weight() const { return path.weight(); }
};

// "depth weight path value mod 3^m"
inline std::string dump_line(const ResidueNode& n) {
  return std::to_string(n.depth()) + " " + std::to_string(n.weight()) + " " + n.path.str() + " " +
         u128_to_string(n.residue.value) + " mod 3^" + std::to_string(n.residue.exponent);
}

struct GrowLimits {
  int depth_cap = 1;
  int witnesses = 1;  // 1 (plain) or 2 (strong)
  // Strong growth only. When set, the second path may be any node of weight
  // below the level whose ones-ratio reaches this threshold and which is not
  // a prefix of the first witness. When empty both paths must reach the
  // level.
  std::optional<Rational> min_ratio;
};

struct TreeReport {
  Codeword codeword;
  std::optional<int> critical_depth;
  std::vector<PathVector> witnesses;  // canonical order: shallower first, then 0 < 1
  std::uint64_t nodes_expanded = 0;
  std::uint64_t frontier_peak = 0;
  int wanted = 1;

  bool closed() const { return static_cast<int>(witnesses.size()) >= wanted; }
};

struct NoObserver {
  void operator()(const ResidueNode&) const {}
};

// Breadth-first growth of the pruned tree rooted at the class named by `c`
// (root exponent l+1) until the first node of weight l appears.
//
// A weight-l node has exponent 1 and is frozen as a leaf. A node at (d, w)
// is dropped once no descendant within depth_cap can still matter: in plain
// and strict mode when w + (depth_cap - d) < l, in relaxed strong mode when
// no descendant can reach the ratio threshold. The observer sees every
// generated node, in canonical order within each depth.
template <class Observer = NoObserver>
TreeReport grow_critical(const Codeword& c, const GrowLimits& limits, Observer&& observe = {}) {
  if (!c.is_root_class()) throw std::domain_error("codeword " + c.display() + " names a class 0 mod 3");
  if (c.level() < 1) throw std::domain_error("codeword must have length >= 2");
  if (limits.depth_cap < 1 || limits.depth_cap > PathVector::kCapacity)
    throw std::invalid_argument("depth cap must be in [1, 128]");
  if (limits.witnesses != 1 && limits.witnesses != 2) throw std::invalid_argument("witnesses must be 1 or 2");

  const int level = c.level();
  const int cap = limits.depth_cap;
  const bool relaxed = limits.witnesses == 2 && limits.min_ratio.has_value();
  const Rational threshold = relaxed ? *limits.min_ratio : Rational{};

  TreeReport report;
  report.codeword = c;
  report.wanted = limits.witnesses;

  std::vector<ResidueNode> frontier{{c.residue(), PathVector{}}};
  std::vector<ResidueNode> next;
  std::vector<PathVector> found;       // weight-l leaves, canonical order
  std::vector<PathVector> candidates;  // relaxed mode: first two qualifying nodes per depth

  auto keep = [&](int d, int w) {
    if (!relaxed) return w + (cap - d) >= level;
    const int t = std::min(level - w, cap - d);
    return t >= 1 && threshold.ratio_at_least(w + t, d + t);
  };

  for (int d = 1; d <= cap; ++d) {
    next.clear();
    int per_depth = 0;
    for (const auto& node : frontier) {
      for (int label = 0; label < 2; ++label) {
        if (label == 1 && !node.residue.can_branch()) break;
        ResidueNode child{label == 0 ? zero_child(node.residue) : one_child(node.residue),
                          node.path.appended(label == 1)};
        ++report.nodes_expanded;
        observe(static_cast<const ResidueNode&>(child));
        const int w = child.weight();
        const bool qualifies = relaxed && w > 0 && threshold.ratio_at_least(w, d);
        if (qualifies && per_depth < 2) {
          candidates.push_back(child.path);
          ++per_depth;
        }
        if (w == level) {
          found.push_back(child.path);
          continue;
        }
        if (keep(d, w)) next.push_back(std::move(child));
      }
    }
    frontier.swap(next);
    report.frontier_peak = std::max<std::uint64_t>(report.frontier_peak, frontier.size());

    if (!found.empty() && !report.critical_depth) report.critical_depth = found.front().length();

    if (report.critical_depth) {
      const PathVector& first = found.front();
      if (limits.witnesses == 1) {
        report.witnesses = {first};
        return report;
      }
      if (!relaxed) {
        if (found.size() >= 2) {
          report.witnesses = {found[0], found[1]};
          return report;
        }
      } else {
        for (const auto& p : candidates) {
          if (p == first || p.is_prefix_of(first)) continue;
          report.witnesses = {first, p};
          std::sort(report.witnesses.begin(), report.witnesses.end());
          return report;
        }
      }
    }
    if (frontier.empty()) break;
  }
  if (!found.empty()) report.witnesses = {found.front()};
  return report;
}

// ---------------------------------------------------------------------------
// Full trees

// Edge-labelled rooted tree with at most one child per label.
template <class Label>
struct EdgeTree {
  struct Node {
    Label label;
    int parent = -1;
    int edge = -1;  // label of the edge from the parent; -1 at the root
    int depth = 0;
    int weight = 0;
    std::array<int, 2> child{-1, -1};
  };
  std::vector<Node> nodes;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) {
      return n.child[0] < 0 && n.child[1] < 0;
    }));
  }
  int max_weight() const {
    int w = 0;
    for (const auto& n : nodes) w = std::max(w, n.weight);
    return w;
  }
  int height() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }
  // Shallowest depth holding a node of the given weight, if any.
  std::optional<int> first_depth_of_weight(int w) const {
    std::optional<int> best;
    for (const auto& n : nodes)
      if (n.weight == w && (!best || n.depth < *best)) best = n.depth;
    return best;
  }
};

using IntegerTree = EdgeTree<Nat>;
using ResidueTree = EdgeTree<Residue>;

inline constexpr int kMaxIntegerTreeDepth = 40;

// Pruned tree of integer preimages of a, depth counted in edges.
inline IntegerTree grow_integer_tree(const Nat& a, int depth) {
  if (a < 1) throw std::domain_error("root must be positive");
  if (a % 3 == 0) throw std::domain_error("root is 0 mod 3");
  if (depth < 0 || depth > kMaxIntegerTreeDepth) throw std::invalid_argument("integer tree depth must be in [0, 40]");
  IntegerTree t;
  t.nodes.push_back({a});
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    if (t.nodes[i].depth == depth) continue;
    const Nat n = t.nodes[i].label;
    std::vector<std::pair<int, Nat>> kids{{0, 2 * n}};
    if (n % 9 == 2 || n % 9 == 8) kids.emplace_back(1, (2 * n - 1) / 3);
    for (auto& [edge, value] : kids) {
      IntegerTree::Node child{std::move(value)};
      child.parent = static_cast<int>(i);
      child.edge = edge;
      child.depth = t.nodes[i].depth + 1;
      child.weight = t.nodes[i].weight + edge;
      t.nodes[i].child[static_cast<std::size_t>(edge)] = static_cast<int>(t.nodes.size());
      t.nodes.push_back(std::move(child));
    }
  }
  return t;
}

// Tree over residues: nodes known only mod 3 cannot branch and stay leaves.
inline ResidueTree grow_residue_tree(const Residue& root, int depth) {
  if (root.value % 3 == 0) throw std::domain_error("root is 0 mod 3");
  if (depth < 0 || depth > PathVector::kCapacity) throw std::invalid_argument("residue tree depth out of range");
  ResidueTree t;
  t.nodes.push_back({root});
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto node = t.nodes[i];
    if (node.depth == depth || node.label.exponent < 2) continue;
    for (const auto& [edge, r] : inverse_t_star_residue(node.label)) {
      ResidueTree::Node child{r};
      child.parent = static_cast<int>(i);
      child.edge = edge;
      child.depth = node.depth + 1;
      child.weight = node.weight + edge;
      t.nodes[i].child[static_cast<std::size_t>(edge)] = static_cast<int>(t.nodes.size());
      t.nodes.push_back(child);
    }
  }
  return t;
}

inline ResidueTree grow_residue_tree(const Codeword& c, int depth) { return grow_residue_tree(c.residue(), depth); }

namespace detail {
template <class Label>
void signature_into(const EdgeTree<Label>& t, int i, std::string& out) {
  out.push_back('(');
  for (int e = 0; e < 2; ++e) {
    const int ch = t.nodes[static_cast<std::size_t>(i)].child[static_cast<std::size_t>(e)];
    if (ch < 0) continue;
    out.push_back(static_cast<char>('0' + e));
    signature_into(t, ch, out);
  }
  out.push_back(')');
}
}  // namespace detail

// Canonical form: equal strings iff the trees are isomorphic as rooted trees
// with edge labels preserved.
template <class Label>
std::string structure_signature(const EdgeTree<Label>& t) {
  std::string out;
  if (!t.nodes.empty()) detail::signature_into(t, 0, out);
  return out;
}

inline constexpr int kMaxStructureDepth = 8;

// R(k): distinct structures among depth-k trees of all classes mod 3^(k+1).
inline std::uint64_t count_structures(int k) {
  if (k < 0) throw std::invalid_argument("k must be non-negative");
  if (k > kMaxStructureDepth)
    throw std::invalid_argument("count_structures enumerates 2*3^k trees; refusing k > " +
                                std::to_string(kMaxStructureDepth));
  std::unordered_set<std::string> seen;
  const u128 mod = pow3(k + 1);
  for (u128 a = 1; a < mod; ++a) {
    if (a % 3 == 0) continue;
    seen.insert(structure_signature(grow_residue_tree(Residue(a, k + 1), k)));
  }
  const auto r = static_cast<std::uint64_t>(seen.size());
  if (r > 2 * static_cast<std::uint64_t>(pow3(k))) throw std::logic_error("structure count exceeds 2*3^k");
  return r;
}

}  // namespace lbcert
