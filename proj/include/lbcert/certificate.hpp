#pragma once

// Lower bound certificates: the data model, the line-oriented file format,
// and an independent verifier. The verifier replays each stored path over
// residues and never grows a tree.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lbcert/numth.hpp"
#include "lbcert/path.hpp"
#include "lbcert/rational.hpp"

namespace lbcert {

enum class Mode { plain, strong };

inline std::string_view mode_name(Mode m) { return m == Mode::plain ? "plain" : "strong"; }
inline Mode parse_mode(std::string_view s) {
  if (s == "plain") return Mode::plain;
  if (s == "strong") return Mode::strong;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}
inline int paths_per_entry(Mode m) { return m == Mode::plain ? 1 : 2; }

struct CertificateEntry {
  Codeword codeword;
  std::vector<PathVector> paths;

  int level() const { return codeword.level(); }
  int max_depth() const {
    int d = 0;
    for (const auto& p : paths) d = std::max(d, p.length());
    return d;
  }
  Rational min_ratio() const {
    Rational r(1, 1);
    for (const auto& p : paths) r = std::min(r, p.ones_ratio());
    return r;
  }

  // "<display> <l> <k1> <path1>[ <k2> <path2>]"
  std::string line() const {
    std::string s = codeword.display() + " " + std::to_string(level());
    for (const auto& p : paths) s += " " + std::to_string(p.length()) + " " + p.str();
    return s;
  }

  friend bool operator==(const CertificateEntry&, const CertificateEntry&) = default;
};

struct Certificate {
  Rational alpha;
  Mode mode = Mode::plain;
  std::vector<CertificateEntry> entries;

  std::size_t size() const { return entries.size(); }
  int max_weight() const {
    int l = 0;
    for (const auto& e : entries) l = std::max(l, e.level());
    return l;
  }
  int max_depth() const {
    int k = 0;
    for (const auto& e : entries) k = std::max(k, e.max_depth());
    return k;
  }
  // The ratio this certificate actually proves: its weakest path.
  Rational min_ratio() const {
    Rational r(1, 1);
    for (const auto& e : entries) r = std::min(r, e.min_ratio());
    return r;
  }

  void sort_canonical() {
    std::sort(entries.begin(), entries.end(),
              [](const CertificateEntry& a, const CertificateEntry& b) { return a.codeword < b.codeword; });
  }

  // Keeps only the first path of every entry.
  Certificate as_plain() const {
    Certificate c{alpha, Mode::plain, entries};
    for (auto& e : c.entries) e.paths.resize(1);
    return c;
  }

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

// ---------------------------------------------------------------------------
// File format

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line), message_(msg) {}
  std::size_t line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

inline std::string format_header(std::string_view kind, Mode mode, const Rational& alpha) {
  return std::string(kind) + " v1 mode=" + std::string(mode_name(mode)) + " alpha=" + alpha.str();
}

inline std::string format_certificate(const Certificate& cert) {
  Certificate sorted = cert;
  sorted.sort_canonical();
  std::string out = format_header("certificate", cert.mode, cert.alpha) + "\n";
  for (const auto& e : sorted.entries) out += e.line() + "\n";
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    const auto start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline int parse_small_int(std::string_view s, std::size_t line) {
  if (s.empty() || s.size() > 6) throw ParseError(line, "bad integer '" + std::string(s) + "'");
  int v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') throw ParseError(line, "bad integer '" + std::string(s) + "'");
    v = v * 10 + (ch - '0');
  }
  return v;
}

struct Header {
  Mode mode;
  Rational alpha;
};

inline Header parse_header(std::string_view text, std::string_view kind, std::size_t line) {
  const auto tok = split_ws(text);
  if (tok.size() != 4 || tok[0] != kind || tok[1] != "v1" || tok[2].substr(0, 5) != "mode=" ||
      tok[3].substr(0, 6) != "alpha=")
    throw ParseError(line, "expected '" + std::string(kind) + " v1 mode=<plain|strong> alpha=<num>/<den>'");
  try {
    return {parse_mode(tok[2].substr(5)), Rational::parse(tok[3].substr(6))};
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, e.what());
  }
}

inline CertificateEntry parse_entry(std::string_view text, Mode mode, std::size_t line) {
  const auto tok = split_ws(text);
  const std::size_t want = 2 + 2 * static_cast<std::size_t>(paths_per_entry(mode));
  if (tok.size() != want)
    throw ParseError(line, "expected " + std::to_string(want) + " fields for a " + std::string(mode_name(mode)) +
                               " entry, got " + std::to_string(tok.size()));
  CertificateEntry e;
  try {
    e.codeword = Codeword::from_display(tok[0]);
  } catch (const std::invalid_argument& ex) {
    throw ParseError(line, ex.what());
  }
  if (parse_small_int(tok[1], line) != e.level())
    throw ParseError(line, "level " + std::string(tok[1]) + " does not match codeword length " +
                               std::to_string(e.codeword.length()));
  for (std::size_t i = 2; i < tok.size(); i += 2) {
    const int k = parse_small_int(tok[i], line);
    PathVector p;
    try {
      p = PathVector::parse(tok[i + 1]);
    } catch (const std::exception& ex) {
      throw ParseError(line, ex.what());
    }
    if (p.length() != k)
      throw ParseError(line, "depth " + std::to_string(k) + " does not match path length " +
                                 std::to_string(p.length()));
    e.paths.push_back(p);
  }
  return e;
}

// Yields (line number, content) for every line; enforces the trailing newline.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  if (!text.empty() && text.back() != '\n') {
    const auto n = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) + 1;
    throw ParseError(n, "missing trailing newline");
  }
  std::size_t line = 0, pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    ++line;
    std::string_view content = text.substr(pos, nl - pos);
    if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
    fn(line, content);
    pos = nl + 1;
  }
}

}  // namespace detail

inline Certificate parse_certificate(std::string_view text) {
  Certificate cert;
  bool have_header = false;
  detail::for_each_line(text, [&](std::size_t line, std::string_view s) {
    if (!s.empty() && s.front() == '#') return;
    if (s.empty()) throw ParseError(line, "empty line");
    if (!have_header) {
      const auto h = detail::parse_header(s, "certificate", line);
      cert.mode = h.mode;
      cert.alpha = h.alpha;
      have_header = true;
      return;
    }
    cert.entries.push_back(detail::parse_entry(s, cert.mode, line));
  });
  if (!have_header) throw ParseError(1, "missing certificate header");
  return cert;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed for '" + path + "'");
}

inline Certificate load_certificate(const std::string& path) {
  try {
    return parse_certificate(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.message());
  }
}

// ---------------------------------------------------------------------------
// Verification

enum class ViolationKind {
  not_prefix_free,
  incomplete_code,
  root_class,
  illegal_one_edge,
  edge_after_level,
  overweight,
  missing_final_one,
  ratio_below_alpha,
  paths_prefix_related,
  path_count,
  empty_path,
};

inline std::string_view kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::not_prefix_free: return "not-prefix-free";
    case ViolationKind::incomplete_code: return "incomplete-code";
    case ViolationKind::root_class: return "root-class";
    case ViolationKind::illegal_one_edge: return "illegal-one-edge";
    case ViolationKind::edge_after_level: return "edge-after-level";
    case ViolationKind::overweight: return "overweight";
    case ViolationKind::missing_final_one: return "missing-final-one";
    case ViolationKind::ratio_below_alpha: return "ratio-below-alpha";
    case ViolationKind::paths_prefix_related: return "paths-prefix-related";
    case ViolationKind::path_count: return "path-count";
    case ViolationKind::empty_path: return "empty-path";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  std::string codeword;   // display form; empty for whole-certificate violations
  int path_index = -1;
  int position = -1;      // 1-based edge number, when the violation is on an edge
  std::string reason;

  std::string str() const {
    std::string s = std::string(kind_name(kind));
    if (!codeword.empty()) s += " [" + codeword + "]";
    if (path_index >= 0) s += " path " + std::to_string(path_index + 1);
    if (position >= 0) s += " position " + std::to_string(position);
    return s + ": " + reason;
  }
};

// Walks `path` from the root class of `c` over residues. Edge 0 is always
// legal; edge 1 needs the node known mod 9 and congruent to 2 or 8 there,
// and is refused once the weight has reached the level.
inline std::optional<Violation> replay_path(const Codeword& c, const PathVector& path) {
  if (!c.is_root_class())
    return Violation{ViolationKind::root_class, c.display(), -1, -1, "root class is 0 mod 3"};
  Residue r = c.residue();
  int weight = 0;
  for (int i = 0; i < path.length(); ++i) {
    if (!path.bit(i)) {
      r = zero_child(r);
      continue;
    }
    if (weight == c.level())
      return Violation{ViolationKind::edge_after_level, c.display(), -1, i + 1,
                       "1-edge after weight reached level " + std::to_string(c.level())};
    if (!r.can_branch())
      return Violation{ViolationKind::illegal_one_edge, c.display(), -1, i + 1,
                       "1-edge at node " + u128_to_string(r.value % 9) + " mod 9 (not 2,8 mod 9)"};
    r = one_child(r);
    ++weight;
  }
  return std::nullopt;
}

// Sum of 3^-length over the entries, exactly.
inline boost::multiprecision::cpp_rational kraft_sum(const std::vector<Codeword>& words) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  std::size_t longest = 0;
  for (const auto& w : words) longest = std::max(longest, w.length());
  cpp_int total = 0;
  for (const auto& w : words) total += boost::multiprecision::pow(cpp_int(3), static_cast<unsigned>(longest - w.length()));
  return cpp_rational(total, boost::multiprecision::pow(cpp_int(3), static_cast<unsigned>(longest)));
}

inline std::vector<Codeword> codewords_of(const Certificate& cert) {
  std::vector<Codeword> out;
  out.reserve(cert.entries.size());
  for (const auto& e : cert.entries) out.push_back(e.codeword);
  return out;
}

// Every prefix relation among `words` (plus the reserved word), reported once
// per offending longer word.
inline std::vector<Violation> prefix_violations(std::vector<Codeword> words) {
  std::vector<Violation> out;
  words.push_back(Codeword::reserved());
  std::sort(words.begin(), words.end());
  std::vector<const Codeword*> stack;
  for (const auto& w : words) {
    while (!stack.empty() && !stack.back()->is_prefix_of(w)) stack.pop_back();
    if (!stack.empty())
      out.push_back({ViolationKind::not_prefix_free, w.display(), -1, -1,
                     "codeword has prefix " + stack.back()->display() + " in the code"});
    stack.push_back(&w);
  }
  return out;
}

// Returns every violation found; an empty list means the certificate is valid.
inline std::vector<Violation> verify(const Certificate& cert) {
  std::vector<Violation> out;
  if (cert.alpha.num() == 0 || cert.alpha >= Rational(1, 1))
    out.push_back({ViolationKind::ratio_below_alpha, "", -1, -1, "alpha must lie strictly between 0 and 1"});

  auto words = codewords_of(cert);
  auto prefix = prefix_violations(words);
  out.insert(out.end(), prefix.begin(), prefix.end());

  words.push_back(Codeword::reserved());
  const auto sum = kraft_sum(words);
  if (sum != 1) {
    const auto entries_only = sum - boost::multiprecision::cpp_rational(1, 3);
    out.push_back({ViolationKind::incomplete_code, "", -1, -1,
                   "Kraft sum " + entries_only.str() + " + 1/3 = " + sum.str() + " != 1"});
  }

  const int want = paths_per_entry(cert.mode);
  for (const auto& e : cert.entries) {
    const auto name = e.codeword.display();
    if (static_cast<int>(e.paths.size()) != want)
      out.push_back({ViolationKind::path_count, name, -1, -1,
                     std::to_string(e.paths.size()) + " paths, mode needs " + std::to_string(want)});
    for (std::size_t j = 0; j < e.paths.size(); ++j) {
      const auto& p = e.paths[j];
      const int idx = static_cast<int>(j);
      if (p.empty()) {
        out.push_back({ViolationKind::empty_path, name, idx, -1, "path has no edges"});
        continue;
      }
      if (auto v = replay_path(e.codeword, p)) {
        v->path_index = idx;
        out.push_back(*v);
      }
      if (p.weight() > e.level())
        out.push_back({ViolationKind::overweight, name, idx, -1,
                       "weight " + std::to_string(p.weight()) + " exceeds level " + std::to_string(e.level())});
      if (p.weight() == e.level() && !p.last())
        out.push_back({ViolationKind::missing_final_one, name, idx, p.length(),
                       "weight-l path does not end in 1"});
      if (!cert.alpha.ratio_at_least(p.weight(), p.length()))
        out.push_back({ViolationKind::ratio_below_alpha, name, idx, -1,
                       "ratio " + p.ones_ratio().str() + " < alpha " + cert.alpha.str()});
    }
    for (std::size_t i = 0; i < e.paths.size(); ++i)
      for (std::size_t j = i + 1; j < e.paths.size(); ++j)
        if (e.paths[i].is_prefix_of(e.paths[j]) || e.paths[j].is_prefix_of(e.paths[i]))
          out.push_back({ViolationKind::paths_prefix_related, name, static_cast<int>(j), -1,
                         "paths " + e.paths[i].str() + " and " + e.paths[j].str() + " are prefix-related"});
  }
  return out;
}

}  // namespace lbcert
