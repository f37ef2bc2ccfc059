#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "lbcert/lbcert.hpp"

using namespace lbcert;

namespace {

const std::string kData = LBCERT_DATA_DIR;

struct Row {
  Rational alpha;
  std::size_t size;
  int max_weight;
  int max_depth;
};

const std::vector<Row> kPlainRows = {
    {{1, 4}, 6, 1, 4},       {{2, 7}, 8, 2, 7},       {{3, 10}, 10, 3, 10},   {{1, 3}, 12, 4, 12},
    {{5, 14}, 34, 5, 14},    {{5, 14}, 34, 6, 14},    {{7, 19}, 68, 7, 19},   {{8, 21}, 120, 8, 21},
    {{9, 23}, 268, 9, 23},   {{2, 5}, 276, 10, 25},   {{11, 27}, 704, 11, 27}, {{12, 29}, 1522, 12, 29},
};

const std::vector<Row> kStrongRows = {
    {{1, 6}, 6, 1, 6},       {{1, 4}, 14, 2, 8},      {{3, 10}, 26, 3, 10},   {{4, 13}, 34, 4, 13},
    {{1, 3}, 36, 5, 15},     {{6, 17}, 98, 6, 17},    {{7, 19}, 204, 7, 19},  {{8, 21}, 390, 8, 21},
    {{9, 23}, 848, 9, 23},   {{2, 5}, 914, 10, 25},   {{11, 27}, 2242, 11, 27}, {{12, 29}, 4720, 12, 29},
};

// Collects failure messages for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  bool ok() const { return failures_.empty(); }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string row_text(const Row& r) {
  return r.alpha.str() + " " + std::to_string(r.size) + " " + std::to_string(r.max_weight) + " " +
         std::to_string(r.max_depth);
}

std::vector<Certificate> emitted;  // every certificate produced by the sweeps, for the Kraft check

void table_sweep(Check& c, Mode mode, const std::vector<Row>& want) {
  const auto rows = max_alpha_sweep(static_cast<int>(want.size()), mode);
  for (std::size_t i = 0; i < want.size(); ++i) {
    const auto got = rows[i].row();
    c.expect(got == row_text(want[i]), "level " + std::to_string(i + 1) + ": got '" + got + "', want '" +
                                           row_text(want[i]) + "'");
    emitted.push_back(rows[i].certificate);
  }
}

void criterion1(Check& c) {
  table_sweep(c, Mode::plain, kPlainRows);
  const Row stretch{{3, 7}, 4782, 15, 35};
  const auto got = max_alpha_at_level(15, std::optional<Rational>{}).row();
  c.expect(got == row_text(stretch), "stretch level 15: got '" + got + "', want '" + row_text(stretch) + "'");
}
void criterion2(Check& c) { table_sweep(c, Mode::strong, kStrongRows); }

void criterion3(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto* name : {"table1.cert", "table2.cert"}) {
    const auto base = load_certificate(kData + "/" + name);
    c.expect(base.alpha == Rational(1, 3), std::string(name) + " alpha");
    c.expect(base.size() == (base.mode == Mode::plain ? 12u : 36u), std::string(name) + " entry count");
    const auto vs = verify(base);
    c.expect(vs.empty(), std::string(name) + " does not verify" + (vs.empty() ? "" : ": " + vs[0].str()));

    for (std::size_t i = 0; i < base.entries.size(); ++i) {
      for (std::size_t j = 0; j < base.entries[i].paths.size(); ++j) {
        const std::string bits = base.entries[i].paths[j].str();
        for (std::size_t b = 0; b < bits.size(); ++b) {
          auto m = base;
          std::string flipped = bits;
          flipped[b] = flipped[b] == '0' ? '1' : '0';
          m.entries[i].paths[j] = PathVector::parse(flipped);
          const auto mv = verify(m);
          c.expect(!mv.empty(), std::string(name) + " accepts bit " + std::to_string(b) + " flipped in " +
                                    base.entries[i].codeword.display());
          c.expect(mv.empty() || mv[0].codeword == base.entries[i].codeword.display(),
                   std::string(name) + " mutation reported against the wrong entry");
        }
      }
      auto d = base;
      d.entries.erase(d.entries.begin() + static_cast<std::ptrdiff_t>(i));
      const auto dv = verify(d);
      c.expect(dv.size() == 1 && dv[0].kind == ViolationKind::incomplete_code,
               std::string(name) + " deletion of " + base.entries[i].codeword.display() + " not reported as incomplete");
    }
  }
  const double dt = seconds_since(t0);
  c.expect(dt < 1.0, "took " + std::to_string(dt) + " s");
}

void criterion4(Check& c) {
  struct Record {
    const char* n;
    std::int64_t sigma;
    double gamma;
    double tol;
  };
  for (const auto& r : {Record{"3", 5, 4.5512, 1e-4}, Record{"1008932249296231", 1142, 33.0558, 1e-3},
                        Record{"37664971860959140595765286740059", 2565, 35.2789, 1e-3}}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto t = trajectory(parse_nat(r.n));
    const double dt = seconds_since(t0);
    c.expect(t.sigma_infinity && *t.sigma_infinity == r.sigma, std::string("sigma of ") + r.n);
    c.expect(t.gamma && std::fabs(*t.gamma - r.gamma) <= r.tol, std::string("gamma of ") + r.n);
    c.expect(dt < 1.0, std::string("trajectory of ") + r.n + " took " + std::to_string(dt) + " s");
  }
  c.expect(trajectory(Nat(3)).parity == "11000", "parity of 3");
}

void criterion5(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 1; k <= 30; ++k) {
    const Nat n = (Nat(1) << k) - 1;
    c.expect(t_iterate(n, k) == boost::multiprecision::pow(Nat(3), static_cast<unsigned>(k)) - 1,
             "T^k(2^k - 1) for k = " + std::to_string(k));
  }
  const double ln2 = std::log(2.0), ln3 = std::log(3.0);
  std::uint64_t diverged = 0, bound_failures = 0;
  for (std::uint64_t n = 2; n <= 1000000; ++n) {
    const auto s = stopping_time(n, 10000);
    if (!s.sigma) {
      ++diverged;
      continue;
    }
    if (n > 100000) continue;
    const double rho = static_cast<double>(s.ones) / static_cast<double>(*s.sigma);
    if (rho >= ln2 / ln3) continue;
    const double gamma = static_cast<double>(*s.sigma) / std::log(static_cast<double>(n));
    if (gamma < 1 / (ln2 - rho * ln3) - 1e-9) ++bound_failures;
  }
  c.expect(diverged == 0, std::to_string(diverged) + " n <= 10^6 did not reach 1 within 10^4 steps");
  c.expect(bound_failures == 0, std::to_string(bound_failures) + " n <= 10^5 violate the ones-ratio lower bound");
  const double dt = seconds_since(t0);
  c.expect(dt < 60.0, "took " + std::to_string(dt) + " s");
}

void criterion6(Check& c) {
  const auto cert = load_certificate(kData + "/table1.cert");
  const auto first = witnesses(cert, Nat(41), 1).witnesses.at(0);
  c.expect(first.n == 109, "first witness is " + first.n.str());
  c.expect(first.k == 3 && t_iterate(Nat(109), 3) == 41, "T^3(109) = 41");
  c.expect(first.ratio() == Rational(1, 3), "first ratio " + first.ratio().str());

  const auto chain = witnesses(cert, Nat(41), 10);
  c.expect(chain.witnesses.size() == 10, "chain length");
  const auto sigma41 = *trajectory(Nat(41)).sigma_infinity;
  for (const auto& w : chain.witnesses) {
    c.expect(w.ratio() >= Rational(1, 3), "ratio of " + w.n.str() + " is " + w.ratio().str());
    c.expect(t_iterate(w.n, w.k) == 41, w.n.str() + " does not reach 41 in " + std::to_string(w.k) + " steps");
    const auto t = trajectory(w.n);
    c.expect(t.sigma_infinity && *t.sigma_infinity == w.k + sigma41, w.n.str() + " does not converge through 41");
  }
  c.expect(witnesses(cert, Nat(1), 1).anchor == 41, "anchor 1 is replaced by 41");
}

std::vector<Codeword> codewords_of_length(int len) {
  std::vector<Codeword> out;
  const u128 mod = pow3(len);
  for (u128 a = 1; a < mod; ++a)
    if (a % 3 != 0) out.push_back(Codeword::of_integer(to_nat(a), len));
  return out;
}

void criterion7(Check& c) {
  // Kraft equality on every certificate emitted above plus the reference tables.
  emitted.push_back(load_certificate(kData + "/table1.cert"));
  emitted.push_back(load_certificate(kData + "/table2.cert"));
  std::size_t kraft_bad = 0;
  for (const auto& cert : emitted) {
    auto words = codewords_of(cert);
    kraft_bad += kraft_sum(words) != boost::multiprecision::cpp_rational(2, 3);
    words.push_back(Codeword::reserved());
    kraft_bad += kraft_sum(words) != 1;
    kraft_bad += !verify(cert).empty();
  }
  c.expect(emitted.size() == 26 && kraft_bad == 0, std::to_string(kraft_bad) + " Kraft or verify failures");

  // Modulus-weight conservation.
  std::uint64_t steps = 0, broken = 0;
  for (int len = 2; steps < 1000000 && len <= 12; ++len) {
    for (const auto& cw : codewords_of_length(len)) {
      const int l = cw.level();
      grow_critical(cw, GrowLimits{3 * l, 1, std::nullopt}, [&](const ResidueNode& n) {
        ++steps;
        broken += n.residue.exponent + n.weight() != l + 1;
      });
      if (steps >= 1000000) break;
    }
  }
  c.expect(steps >= 1000000 && broken == 0,
           "m + w = l + 1 broken " + std::to_string(broken) + " times in " + std::to_string(steps) + " steps");

  // Residue and integer growth agree.
  std::mt19937_64 rng(20261016);
  int roots = 0, disagree = 0;
  while (roots < 100) {
    const std::uint64_t a = 1 + rng() % 1000000;
    if (a % 3 == 0) continue;
    const auto full = grow_integer_tree(Nat(a), 3 + static_cast<int>(rng() % 12));
    const int l = full.max_weight();
    if (l == 0) continue;
    const int k = *full.first_depth_of_weight(l);
    disagree += structure_signature(grow_integer_tree(Nat(a), k)) !=
                structure_signature(grow_residue_tree(Codeword::of_integer(Nat(a), l + 1), k));
    ++roots;
  }
  c.expect(disagree == 0, std::to_string(disagree) + " of 100 roots disagree");

  // Mean frontier (4/3)^d.
  for (int d = 0; d <= 6; ++d) {
    std::uint64_t total = 0, trees = 0;
    for (const auto& cw : codewords_of_length(d + 1)) {
      const auto t = grow_residue_tree(cw, d);
      for (const auto& n : t.nodes) total += n.depth == d;
      ++trees;
    }
    c.expect(total * static_cast<std::uint64_t>(pow3(d)) == trees * (std::uint64_t{1} << (2 * d)),
             "mean frontier at depth " + std::to_string(d));
  }

  // Determinism across worker counts.
  for (Mode mode : {Mode::plain, Mode::strong}) {
    std::string base;
    for (int w : {1, 4, 8}) {
      EngineOptions opts;
      opts.workers = w;
      const auto out = format_certificate(std::get<Certificate>(*run(Rational(9, 23), 9, mode, opts).outcome));
      if (base.empty()) base = out;
      c.expect(out == base, std::string(mode_name(mode)) + " certificate differs at workers = " + std::to_string(w));
    }
  }

  // Interrupt and resume.
  const Rational alpha(9, 23);
  const auto want = format_certificate(std::get<Certificate>(*run(alpha, 9, Mode::strong).outcome));
  const auto path = (std::filesystem::temp_directory_path() / ("lbcert_accept_" + std::to_string(::getpid()))).string();
  for (std::uint64_t stop : {5u, 100u, 333u}) {
    std::filesystem::remove(path);
    EngineOptions first;
    first.checkpoint = path;
    first.stop_after = stop;
    run(alpha, 9, Mode::strong, first);
    EngineOptions second;
    second.checkpoint = path;
    second.workers = 4;
    const auto resumed = run(alpha, 9, Mode::strong, second);
    c.expect(resumed.resumed && format_certificate(std::get<Certificate>(*resumed.outcome)) == want,
             "resume after " + std::to_string(stop) + " commits differs");
  }
  std::filesystem::remove(path);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"1 Maximal alpha rows, plain, levels 1..12 and 15", criterion1},
      {"2 Maximal alpha rows, strong, levels 1..12", criterion2},
      {"3 Verifier on the reference certificates", criterion3},
      {"4 Trajectory records", criterion4},
      {"5 Structural identities", criterion5},
      {"6 Witness construction from anchor 41", criterion6},
      {"7 Property suites", criterion7},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::ostringstream line;
    line << (c.ok() ? "PASS" : "FAIL") << "  " << name << "  (" << std::fixed;
    line.precision(2);
    line << seconds_since(t0) << " s)";
    std::cout << line.str() << std::endl;
    for (const auto& f : c.failures()) std::cout << "      " << f << "\n";
    failed += !c.ok();
  }
  std::cout << (failed ? "FAILED " + std::to_string(failed) + " of 7" : "ALL 7 PASSED") << std::endl;
  return failed ? 1 : 0;
}
