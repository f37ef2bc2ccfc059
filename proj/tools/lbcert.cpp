#include <cstdio>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "lbcert/lbcert.hpp"

namespace {

using namespace lbcert;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUnclosed = 2;
constexpr int kUsage = 3;

constexpr int kDefaultMaxWeight = 14;
constexpr int kUnguardedMaxWeight = 20;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Rational rational_flag(const std::string& text, const char* flag) {
  try {
    return Rational::parse(text);
  } catch (const std::exception& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

void emit(const std::optional<std::string>& out, const std::string& text) {
  if (out)
    write_file(*out, text);
  else
    std::cout << text;
}

std::string unclosed_text(const UnclosedReport& u) {
  std::string s = "unclosed: codeword " + u.failed.display() + " at level " + std::to_string(u.failed.level()) +
                  " has no ";
  s += u.critical_depth ? "second path" : "critical path";
  s += " within depth cap " + std::to_string(u.depth_cap);
  if (u.critical_depth) s += " (critical depth " + std::to_string(*u.critical_depth) + ")";
  s += "\nopen " + std::to_string(u.open.size()) + ":";
  for (const auto& c : u.open) s += " " + c.display();
  return s + "\n";
}

struct SearchArgs {
  std::string alpha;
  bool strong = false;
  int max_weight = kDefaultMaxWeight;
  bool allow_large = false;
  int workers = 1;
  std::optional<std::string> checkpoint;
  std::optional<std::string> out;
};

int cmd_search(const SearchArgs& a) {
  const Rational alpha = rational_flag(a.alpha, "--alpha");
  if (a.max_weight > kUnguardedMaxWeight && !a.allow_large)
    throw UsageError("--max-weight above " + std::to_string(kUnguardedMaxWeight) + " needs --allow-large");
  EngineOptions opts;
  opts.workers = a.workers;
  opts.checkpoint = a.checkpoint;
  const Mode mode = a.strong ? Mode::strong : Mode::plain;
  validate_search_args(alpha, a.max_weight);
  const auto result = run(alpha, a.max_weight, mode, opts);
  if (const auto* u = std::get_if<UnclosedReport>(&*result.outcome)) {
    std::cout << unclosed_text(*u);
    return kUnclosed;
  }
  const auto& cert = std::get<Certificate>(*result.outcome);
  emit(a.out, format_certificate(cert));
  std::cerr << "closed: |C|=" << cert.size() << " max-weight " << cert.max_weight() << " max-depth "
            << cert.max_depth() << " min ratio " << cert.min_ratio().str() << "\n";
  return kOk;
}

struct VerifyArgs {
  std::string alpha;
  bool strong = false;
  std::string file;
};

int cmd_verify(const VerifyArgs& a) {
  const Rational alpha = rational_flag(a.alpha, "--alpha");
  const Mode mode = a.strong ? Mode::strong : Mode::plain;
  Certificate cert;
  try {
    cert = parse_certificate(read_file(a.file));
  } catch (const ParseError& e) {
    std::cout << a.file << ":" << e.line() << ": " << e.message() << "\nINVALID\n";
    return kInvalid;
  }
  std::size_t bad = 0;
  if (cert.mode != mode) {
    std::cout << "header: certificate is " << mode_name(cert.mode) << ", expected " << mode_name(mode) << "\n";
    ++bad;
  }
  if (cert.alpha != alpha) {
    std::cout << "header: certificate alpha " << cert.alpha.str() << ", expected " << alpha.str() << "\n";
    ++bad;
  }
  for (const auto& v : verify(cert)) {
    std::cout << v.str() << "\n";
    ++bad;
  }
  if (bad) {
    std::cout << "INVALID (" << bad << " violation" << (bad == 1 ? "" : "s") << ")\n";
    return kInvalid;
  }
  std::cout << "VALID " << cert.size() << " entries, max-weight " << cert.max_weight() << ", max-depth "
            << cert.max_depth() << "\n";
  return kOk;
}

struct MaxAlphaArgs {
  int level = 0;
  bool strong = false;
  bool all = false;
  std::optional<std::string> seed;
  int workers = 1;
  std::optional<std::string> out;
};

int cmd_max_alpha(const MaxAlphaArgs& a) {
  if (a.level < 1 || a.level > kMaxLevel) throw UsageError("--level must be in [1, " + std::to_string(kMaxLevel) + "]");
  const Mode mode = a.strong ? Mode::strong : Mode::plain;
  auto print = [](const MaxAlphaResult& r) { std::cout << r.row() << std::endl; };
  MaxAlphaResult last;
  try {
    if (a.seed) {
      last = max_alpha_at_level(a.level, rational_flag(*a.seed, "--seed"), mode, a.workers);
      print(last);
    } else {
      auto rows = max_alpha_sweep(a.level, mode, a.workers, [&](const MaxAlphaResult& r) {
        if (a.all || r.level == a.level) print(r);
      });
      last = rows.back();
    }
  } catch (const SeedDoesNotClose& e) {
    std::cout << e.what() << "\n";
    return kUnclosed;
  }
  if (a.out) write_file(*a.out, format_certificate(last.certificate));
  return kOk;
}

int cmd_trajectory(const std::string& n_text, std::int64_t cap) {
  Nat n;
  try {
    n = parse_nat(n_text);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (n < 1) throw UsageError("N must be positive");
  if (cap < 0) throw UsageError("--cap must be non-negative");
  const auto r = trajectory(n, cap);
  std::string sigma = "?", gamma = "?", rho = "?";
  if (r.sigma_infinity) sigma = std::to_string(*r.sigma_infinity);
  if (r.gamma) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", *r.gamma);
    gamma = buf;
  }
  if (r.ones_ratio) rho = r.ones_ratio->str();
  std::cout << "n=" << r.n << " sigma=" << sigma << " gamma=" << gamma << " rho=" << rho << " parity=" << r.parity
            << "\n";
  return kOk;
}

struct WitnessArgs {
  std::string cert;
  std::string anchor;
  std::size_t count = 1;
  bool branching = false;
};

int cmd_witnesses(const WitnessArgs& a) {
  Nat anchor;
  try {
    anchor = parse_nat(a.anchor);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const auto cert = load_certificate(a.cert);
  const auto chain = witnesses(cert, anchor, a.count, a.branching);
  if (chain.anchor != chain.requested_anchor)
    std::cout << "# anchor " << chain.requested_anchor << " lies on a cycle, using " << chain.anchor << "\n";
  for (const auto& w : chain.witnesses) std::cout << w.n << " " << w.k << " " << w.ratio().str() << "\n";
  return kOk;
}

struct TreeArgs {
  std::string codeword;
  std::string alpha;
  bool strong = false;
  bool dump = false;
};

int cmd_tree(const TreeArgs& a) {
  const Rational alpha = rational_flag(a.alpha, "--alpha");
  Codeword c;
  try {
    c = Codeword::from_display(a.codeword);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (c.level() < 1 || !c.is_root_class()) throw UsageError("codeword must have length >= 2 and leading digit 1 or 2");
  if (alpha.num() == 0 || alpha >= Rational(1, 1)) throw UsageError("alpha must satisfy 0 < alpha < 1");
  const auto limits = limits_for(alpha, c.level(), a.strong ? Mode::strong : Mode::plain);
  TreeReport r;
  if (a.dump)
    r = grow_critical(c, limits, [](const ResidueNode& n) { std::cout << dump_line(n) << "\n"; });
  else
    r = grow_critical(c, limits);
  std::cout << "codeword " << c.display() << " level " << c.level() << " residue " << u128_to_string(c.residue().value)
            << " mod 3^" << c.residue().exponent << " depth-cap " << limits.depth_cap << "\n";
  std::cout << "critical-depth " << (r.critical_depth ? std::to_string(*r.critical_depth) : "none") << " nodes "
            << r.nodes_expanded << " frontier-peak " << r.frontier_peak << "\n";
  for (const auto& p : r.witnesses) std::cout << "path " << p.length() << " " << p.str() << "\n";
  std::cout << (r.closed() ? "closed" : "open") << "\n";
  return kOk;
}

int cmd_stats(const std::string& file, const std::optional<std::string>& csv) {
  const std::string text = read_file(file);
  std::vector<std::pair<int, std::uint64_t>> rows;
  try {
    if (text.rfind("checkpoint", 0) == 0)
      rows = stats(parse_checkpoint(text));
    else
      rows = stats(parse_certificate(text));
  } catch (const ParseError& e) {
    std::cout << file << ":" << e.line() << ": " << e.message() << "\n";
    return kInvalid;
  }
  const std::string out = stats_csv(rows);
  if (csv)
    write_file(*csv, out);
  else
    std::cout << out;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower-bound certificates for 3x+1 ones-ratios"};
  app.require_subcommand(1);

  SearchArgs sa;
  auto* search = app.add_subcommand("search", "Greedy certificate search");
  search->add_option("--alpha", sa.alpha, "Target ratio N/D")->required();
  search->add_flag("--strong", sa.strong, "Two witness paths per entry");
  search->add_option("--max-weight", sa.max_weight, "Largest codeword level")->capture_default_str();
  search->add_flag("--allow-large", sa.allow_large, "Permit --max-weight above 20");
  search->add_option("--workers", sa.workers, "Tree-growing threads")->check(CLI::PositiveNumber);
  search->add_option("--checkpoint", sa.checkpoint, "Checkpoint file (resumed from when present)");
  search->add_option("--out", sa.out, "Certificate output file");

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Replay a certificate file");
  verify_cmd->add_option("--alpha", va.alpha, "Claimed ratio N/D")->required();
  verify_cmd->add_flag("--strong", va.strong, "Expect a strong certificate");
  verify_cmd->add_option("file", va.file, "Certificate file")->required();

  MaxAlphaArgs ma;
  auto* max_alpha = app.add_subcommand("max-alpha", "Maximal ratio certified at a level");
  max_alpha->add_option("--level", ma.level, "Level l")->required();
  max_alpha->add_flag("--strong", ma.strong, "Strong certificates");
  max_alpha->add_flag("--all", ma.all, "Print every level up to --level");
  max_alpha->add_option("--seed", ma.seed, "Start from this ratio instead of sweeping from level 1");
  max_alpha->add_option("--workers", ma.workers, "Tree-growing threads")->check(CLI::PositiveNumber);
  max_alpha->add_option("--out", ma.out, "Write the final certificate here");

  std::string traj_n;
  std::int64_t traj_cap = kDefaultTrajectoryCap;
  auto* traj = app.add_subcommand("trajectory", "Stopping time, gamma and parity of N");
  traj->add_option("N", traj_n, "Positive integer")->required();
  traj->add_option("--cap", traj_cap, "Iteration cap")->capture_default_str();

  WitnessArgs wa;
  auto* wit = app.add_subcommand("witnesses", "Integers iterating to an anchor with high ones-ratio");
  wit->add_option("--cert", wa.cert, "Certificate file")->required();
  wit->add_option("--anchor", wa.anchor, "Anchor a")->required();
  wit->add_option("--count", wa.count, "Number of witnesses")->check(CLI::PositiveNumber)->capture_default_str();
  wit->add_flag("--branching", wa.branching, "Use both paths of a strong certificate");

  TreeArgs ta;
  auto* tree = app.add_subcommand("tree", "Grow one pruned tree");
  tree->add_option("--codeword", ta.codeword, "Ternary display, most significant digit first")->required();
  tree->add_option("--alpha", ta.alpha, "Ratio N/D")->required();
  tree->add_flag("--strong", ta.strong, "Look for two paths");
  tree->add_flag("--dump", ta.dump, "Print every generated node");

  std::string stats_file;
  std::optional<std::string> stats_out;
  auto* st = app.add_subcommand("stats", "Codewords of level >= l' per level");
  st->add_option("--cert", stats_file, "Certificate or checkpoint file")->required();
  st->add_option("--csv", stats_out, "Write CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*search) return cmd_search(sa);
    if (*verify_cmd) return cmd_verify(va);
    if (*max_alpha) return cmd_max_alpha(ma);
    if (*traj) return cmd_trajectory(traj_n, traj_cap);
    if (*wit) return cmd_witnesses(wa);
    if (*tree) return cmd_tree(ta);
    if (*st) return cmd_stats(stats_file, stats_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kUsage;
}
