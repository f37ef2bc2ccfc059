#pragma once

// Parallel, checkpointable execution of the certificate search.
//
// The coordinator owns the open set and commits tree results strictly in the
// serial order of the greatest-level-first search (depth-first preorder over
// the splitting tree, digits 0,1,2). Workers evaluate open codewords ahead of
// that order; since each tree outcome is a pure function of its codeword, the
// committed sequence, the final certificate and any unclosed report are the
// same for every worker count.

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lbcert/certificate.hpp"
#include "lbcert/numth.hpp"
#include "lbcert/rational.hpp"
#include "lbcert/tree.hpp"

namespace lbcert {

inline constexpr int kMaxLevel = kMaxExponent - 1;

struct WorkItem {
  Codeword codeword;
  int level = 0;
  int depth_cap = 0;
};

inline GrowLimits limits_for(const Rational& alpha, int level, Mode mode) {
  GrowLimits g;
  const auto cap = alpha.depth_cap(level);
  if (cap < 1 || cap > PathVector::kCapacity)
    throw std::invalid_argument("depth cap floor(" + std::to_string(level) + "/" + alpha.str() + ") = " +
                                std::to_string(cap) + " outside [1, 128]");
  g.depth_cap = static_cast<int>(cap);
  if (mode == Mode::strong) {
    g.witnesses = 2;
    g.min_ratio = alpha;
  }
  return g;
}

inline WorkItem make_work_item(const Codeword& c, const Rational& alpha) {
  return {c, c.level(), static_cast<int>(alpha.depth_cap(c.level()))};
}

// Evaluates one work item as a search step: the entry when it closes.
inline std::optional<CertificateEntry> close_entry(const TreeReport& r) {
  if (!r.critical_depth || !r.closed()) return std::nullopt;
  return CertificateEntry{r.codeword, r.witnesses};
}

struct LevelCounters {
  std::uint64_t opened = 0;
  std::uint64_t closed = 0;
  std::uint64_t split = 0;
  friend bool operator==(const LevelCounters&, const LevelCounters&) = default;
};

struct CheckpointState {
  Rational alpha;
  Mode mode = Mode::plain;
  std::vector<Codeword> open;              // highest priority first
  std::vector<CertificateEntry> closed;    // canonical codeword order
  std::map<int, LevelCounters> counters;

  static CheckpointState initial(const Rational& alpha, Mode mode) {
    CheckpointState s;
    s.alpha = alpha;
    s.mode = mode;
    for (int i = 1; i <= 2; ++i)
      for (int j = 0; j <= 2; ++j) s.open.push_back(Codeword{i, j});
    s.counters[1].opened = 6;
    return s;
  }

  // open + closed + the reserved word; the search keeps this at exactly 1.
  boost::multiprecision::cpp_rational kraft() const {
    std::vector<Codeword> words = open;
    for (const auto& e : closed) words.push_back(e.codeword);
    words.push_back(Codeword::reserved());
    return kraft_sum(words);
  }

  friend bool operator==(const CheckpointState&, const CheckpointState&) = default;
};

inline std::string format_checkpoint(const CheckpointState& s) {
  std::string out = format_header("checkpoint", s.mode, s.alpha) + "\n";
  for (const auto& [level, c] : s.counters)
    out += "level " + std::to_string(level) + " " + std::to_string(c.opened) + " " + std::to_string(c.closed) + " " +
           std::to_string(c.split) + "\n";
  for (const auto& c : s.open) out += "open " + c.display() + "\n";
  for (const auto& e : s.closed) out += "closed " + e.line() + "\n";
  return out;
}

inline CheckpointState parse_checkpoint(std::string_view text) {
  CheckpointState s;
  bool have_header = false;
  detail::for_each_line(text, [&](std::size_t line, std::string_view l) {
    if (!l.empty() && l.front() == '#') return;
    if (l.empty()) throw ParseError(line, "empty line");
    if (!have_header) {
      const auto h = detail::parse_header(l, "checkpoint", line);
      s.mode = h.mode;
      s.alpha = h.alpha;
      have_header = true;
      return;
    }
    const auto sp = l.find(' ');
    const auto tag = l.substr(0, sp);
    const auto rest = sp == std::string_view::npos ? std::string_view{} : l.substr(sp + 1);
    if (tag == "open") {
      try {
        s.open.push_back(Codeword::from_display(rest));
      } catch (const std::invalid_argument& e) {
        throw ParseError(line, e.what());
      }
    } else if (tag == "closed") {
      s.closed.push_back(detail::parse_entry(rest, s.mode, line));
    } else if (tag == "level") {
      const auto tok = detail::split_ws(rest);
      if (tok.size() != 4) throw ParseError(line, "expected 'level <l> <opened> <closed> <split>'");
      auto num = [&](std::string_view t) {
        std::uint64_t v = 0;
        if (t.empty()) throw ParseError(line, "bad counter");
        for (char ch : t) {
          if (ch < '0' || ch > '9') throw ParseError(line, "bad counter '" + std::string(t) + "'");
          v = v * 10 + static_cast<std::uint64_t>(ch - '0');
        }
        return v;
      };
      auto& c = s.counters[static_cast<int>(num(tok[0]))];
      c.opened = num(tok[1]);
      c.closed = num(tok[2]);
      c.split = num(tok[3]);
    } else {
      throw ParseError(line, "unknown record '" + std::string(tag) + "'");
    }
  });
  if (!have_header) throw ParseError(1, "missing checkpoint header");
  return s;
}

struct UnclosedReport {
  Codeword failed;                   // the first codeword, in search order, that could not close
  int depth_cap = 0;
  std::optional<int> critical_depth; // strong mode: critical but lacking a second path
  std::vector<Codeword> open;        // still open when the search stopped, priority order
};

using SearchOutcome = std::variant<Certificate, UnclosedReport>;

struct EngineOptions {
  int workers = 1;
  std::optional<std::string> checkpoint;  // resumed from when present, persisted to while running
  std::chrono::milliseconds checkpoint_interval{30000};
  std::optional<std::uint64_t> stop_after;  // commit count at which to persist and return early
  // Cap on the summed expected frontier, (4/3)^depth_cap, of trees in flight.
  // Zero means unlimited. An item over budget runs alone.
  double frontier_budget = 0;
  std::function<void(const CheckpointState&)> on_merge;
};

struct EngineResult {
  std::optional<SearchOutcome> outcome;  // empty when stopped early via stop_after
  std::uint64_t commits = 0;
  std::uint64_t trees_grown = 0;
  bool resumed = false;
};

namespace detail {

inline void persist_checkpoint(const std::string& path, const CheckpointState& s) {
  const std::string tmp = path + ".tmp";
  write_file(tmp, format_checkpoint(s));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot move checkpoint into place at '" + path + "': " + ec.message());
}

// Fixed pool of workers executing grow_critical; no state shared beyond the
// two queues.
class TreePool {
 public:
  TreePool(int workers, Rational alpha, Mode mode) : alpha_(alpha), mode_(mode) {
    for (int i = 0; i < workers; ++i) threads_.emplace_back([this] { work(); });
  }
  ~TreePool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }
  TreePool(const TreePool&) = delete;
  TreePool& operator=(const TreePool&) = delete;

  void submit(Codeword c) {
    {
      std::lock_guard lock(mu_);
      tasks_.push_back(std::move(c));
    }
    cv_.notify_one();
  }

  // Blocks for at least one finished tree.
  std::vector<TreeReport> collect() {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [&] { return !results_.empty() || error_; });
    if (error_) std::rethrow_exception(error_);
    std::vector<TreeReport> out;
    out.swap(results_);
    return out;
  }

 private:
  void work() {
    for (;;) {
      Codeword c;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !tasks_.empty(); });
        if (stop_) return;
        c = std::move(tasks_.front());
        tasks_.pop_front();
      }
      try {
        auto r = grow_critical(c, limits_for(alpha_, c.level(), mode_));
        std::lock_guard lock(mu_);
        results_.push_back(std::move(r));
      } catch (...) {
        std::lock_guard lock(mu_);
        if (!error_) error_ = std::current_exception();
      }
      done_cv_.notify_one();
    }
  }

  Rational alpha_;
  Mode mode_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  std::deque<Codeword> tasks_;
  std::vector<TreeReport> results_;
  std::exception_ptr error_;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

inline double expected_frontier(int depth_cap) { return std::pow(4.0 / 3.0, depth_cap); }

}  // namespace detail

inline void validate_search_args(const Rational& alpha, int max_weight) {
  if (alpha.num() == 0 || alpha >= Rational(1, 1)) throw std::invalid_argument("alpha must satisfy 0 < alpha < 1");
  if (max_weight < 1) throw std::invalid_argument("max-weight must be >= 1");
  if (max_weight > kMaxLevel)
    throw std::invalid_argument("max-weight must be <= " + std::to_string(kMaxLevel) +
                                " (codewords are limited to 80 ternary digits)");
  const auto cap = alpha.depth_cap(max_weight);
  if (cap > PathVector::kCapacity)
    throw std::invalid_argument("depth cap floor(" + std::to_string(max_weight) + "/" + alpha.str() + ") = " +
                                std::to_string(cap) + " exceeds 128");
}

inline EngineResult run(const Rational& alpha, int max_weight, Mode mode, const EngineOptions& opts = {}) {
  validate_search_args(alpha, max_weight);
  if (opts.workers < 1) throw std::invalid_argument("workers must be >= 1");

  EngineResult result;
  CheckpointState state = CheckpointState::initial(alpha, mode);
  if (opts.checkpoint && std::filesystem::exists(*opts.checkpoint)) {
    CheckpointState saved;
    try {
      saved = parse_checkpoint(read_file(*opts.checkpoint));
    } catch (const ParseError& e) {
      throw std::runtime_error("checkpoint '" + *opts.checkpoint + "': " + e.what());
    }
    if (saved.alpha != alpha || saved.mode != mode)
      throw std::runtime_error("checkpoint '" + *opts.checkpoint + "' was written for mode=" +
                               std::string(mode_name(saved.mode)) + " alpha=" + saved.alpha.str() +
                               ", refusing to resume with mode=" + std::string(mode_name(mode)) +
                               " alpha=" + alpha.str());
    state = std::move(saved);
    result.resumed = true;
  }

  // Internally the open set is a stack whose back is the top priority.
  std::vector<Codeword> stack(state.open.rbegin(), state.open.rend());
  std::map<Codeword, TreeReport> ready;
  std::set<Codeword> in_flight;
  double budget_used = 0;

  auto snapshot = [&] {
    state.open.assign(stack.rbegin(), stack.rend());
    return state;
  };
  auto last_save = std::chrono::steady_clock::now();
  int deepest = 0;
  for (const auto& c : stack) deepest = std::max(deepest, c.level());
  auto save = [&] {
    if (!opts.checkpoint) return;
    detail::persist_checkpoint(*opts.checkpoint, snapshot());
    last_save = std::chrono::steady_clock::now();
  };

  std::optional<detail::TreePool> pool;
  if (opts.workers > 1) pool.emplace(opts.workers, alpha, mode);

  auto insert_closed = [&](CertificateEntry e) {
    auto pos = std::lower_bound(state.closed.begin(), state.closed.end(), e.codeword,
                                [](const CertificateEntry& x, const Codeword& c) { return x.codeword < c; });
    state.closed.insert(pos, std::move(e));
  };

  for (;;) {
    // Commit everything available at the top of the stack, in order.
    while (!stack.empty()) {
      auto it = ready.find(stack.back());
      if (it == ready.end()) break;
      TreeReport report = std::move(it->second);
      ready.erase(it);
      const Codeword c = stack.back();
      stack.pop_back();
      const int level = c.level();
      auto& counters = state.counters[level];

      if (auto entry = close_entry(report)) {
        insert_closed(std::move(*entry));
        ++counters.closed;
      } else if (level >= max_weight) {
        stack.push_back(c);
        UnclosedReport u;
        u.failed = c;
        u.depth_cap = static_cast<int>(alpha.depth_cap(level));
        u.critical_depth = report.critical_depth;
        u.open.assign(stack.rbegin(), stack.rend());
        ++result.commits;
        save();
        result.outcome = std::move(u);
        return result;
      } else {
        ++counters.split;
        for (int d = 2; d >= 0; --d) stack.push_back(c.extended(static_cast<std::uint8_t>(d)));
        state.counters[level + 1].opened += 3;
      }
      ++result.commits;
      if (opts.on_merge) opts.on_merge(snapshot());

      const bool new_level = !stack.empty() && stack.back().level() > deepest;
      if (new_level) deepest = stack.back().level();
      if (new_level || std::chrono::steady_clock::now() - last_save >= opts.checkpoint_interval) save();
      if (opts.stop_after && result.commits >= *opts.stop_after && !stack.empty()) {
        save();
        return result;
      }
    }

    if (stack.empty()) {
      Certificate cert{alpha, mode, state.closed};
      save();
      result.outcome = std::move(cert);
      return result;
    }

    if (!pool) {
      const Codeword c = stack.back();
      ready.emplace(c, grow_critical(c, limits_for(alpha, c.level(), mode)));
      ++result.trees_grown;
      continue;
    }

    // Dispatch ahead of the commit point, top priority first.
    for (auto it = stack.rbegin(); it != stack.rend() && static_cast<int>(in_flight.size()) < opts.workers; ++it) {
      if (in_flight.count(*it) || ready.count(*it)) continue;
      const double cost = opts.frontier_budget > 0 ? detail::expected_frontier(make_work_item(*it, alpha).depth_cap) : 0;
      if (opts.frontier_budget > 0 && !in_flight.empty() && budget_used + cost > opts.frontier_budget) break;
      in_flight.insert(*it);
      budget_used += cost;
      pool->submit(*it);
    }
    for (auto& r : pool->collect()) {
      in_flight.erase(r.codeword);
      if (opts.frontier_budget > 0) budget_used -= detail::expected_frontier(make_work_item(r.codeword, alpha).depth_cap);
      ++result.trees_grown;
      ready.emplace(r.codeword, std::move(r));
    }
    if (in_flight.empty()) budget_used = 0;
  }
}

// ---------------------------------------------------------------------------
// Open-vector statistics

// For each level l' >= 1: how many codewords of level >= l' the code holds.
inline std::vector<std::pair<int, std::uint64_t>> level_counts(const std::vector<Codeword>& words) {
  int top = 0;
  for (const auto& w : words) top = std::max(top, w.level());
  std::vector<std::pair<int, std::uint64_t>> out;
  for (int l = 1; l <= top; ++l) {
    std::uint64_t n = 0;
    for (const auto& w : words) n += w.level() >= l;
    out.emplace_back(l, n);
  }
  return out;
}

inline std::vector<std::pair<int, std::uint64_t>> stats(const CheckpointState& s) {
  std::vector<Codeword> words = s.open;
  for (const auto& e : s.closed) words.push_back(e.codeword);
  return level_counts(words);
}

inline std::vector<std::pair<int, std::uint64_t>> stats(const Certificate& c) { return level_counts(codewords_of(c)); }

inline std::string stats_csv(const std::vector<std::pair<int, std::uint64_t>>& rows) {
  std::string out = "level,count\n";
  for (const auto& [l, n] : rows) out += std::to_string(l) + "," + std::to_string(n) + "\n";
  return out;
}

}  // namespace lbcert
