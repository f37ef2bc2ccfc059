#include <unistd.h>

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "lbcert/engine.hpp"

using namespace lbcert;

namespace {

const std::string kData = LBCERT_DATA_DIR;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("lbcert_" + name + "_" + std::to_string(::getpid()))).string();
}

Certificate closed_run(const Rational& alpha, int max_weight, Mode mode, EngineOptions opts = {}) {
  const auto r = run(alpha, max_weight, mode, opts);
  EXPECT_TRUE(r.outcome);
  return std::get<Certificate>(*r.outcome);
}

}  // namespace

TEST(Engine, PlainOneThirdMatchesReferenceFile) {
  const auto cert = closed_run(Rational(1, 3), 4, Mode::plain);
  EXPECT_EQ(format_certificate(cert), read_file(kData + "/table1.cert"));
}

TEST(Engine, SmallRows) {
  auto c = closed_run(Rational(1, 4), 1, Mode::plain);
  EXPECT_EQ(c.size(), 6u);
  EXPECT_EQ(c.max_depth(), 4);
  c = closed_run(Rational(1, 6), 1, Mode::strong);
  EXPECT_EQ(c.size(), 6u);
  EXPECT_EQ(c.max_depth(), 6);
  c = closed_run(Rational(1, 3), 5, Mode::strong);
  EXPECT_EQ(c.size(), 36u);
  EXPECT_EQ(c.max_weight(), 5);
  EXPECT_EQ(c.max_depth(), 15);
}

TEST(Engine, StrongOneThirdMatchesReferenceCodewords) {
  const auto cert = closed_run(Rational(1, 3), 5, Mode::strong);
  EXPECT_EQ(codewords_of(cert), codewords_of(load_certificate(kData + "/table2.cert")));
  EXPECT_TRUE(verify(cert).empty());
}

TEST(Engine, DeterministicAcrossWorkerCounts) {
  for (Mode mode : {Mode::plain, Mode::strong}) {
    EngineOptions one;
    const std::string base = format_certificate(closed_run(Rational(8, 21), 8, mode, one));
    for (int w : {4, 8}) {
      EngineOptions opts;
      opts.workers = w;
      EXPECT_EQ(format_certificate(closed_run(Rational(8, 21), 8, mode, opts)), base) << w;
      opts.frontier_budget = 1e4;
      EXPECT_EQ(format_certificate(closed_run(Rational(8, 21), 8, mode, opts)), base) << w << " budgeted";
    }
  }
}

TEST(Engine, EveryCodewordIsGrownOnce) {
  for (int w : {1, 4}) {
    EngineOptions opts;
    opts.workers = w;
    const auto r = run(Rational(7, 19), 7, Mode::plain, opts);
    EXPECT_EQ(r.trees_grown, r.commits);
    const auto& cert = std::get<Certificate>(*r.outcome);
    EXPECT_EQ(cert.size(), 68u);
    // each split adds three words and removes one: commits = entries + (entries - 6) / 2
    EXPECT_EQ(r.commits, cert.size() + (cert.size() - 6) / 2);
  }
}

TEST(Engine, KraftIsOneAfterEveryMerge) {
  int merges = 0;
  EngineOptions opts;
  opts.on_merge = [&](const CheckpointState& s) {
    ++merges;
    ASSERT_EQ(s.kraft(), 1);
    ASSERT_TRUE(std::is_sorted(s.closed.begin(), s.closed.end(),
                               [](const auto& a, const auto& b) { return a.codeword < b.codeword; }));
  };
  closed_run(Rational(9, 23), 9, Mode::plain, opts);
  EXPECT_GT(merges, 100);
}

TEST(Engine, GreatestLevelFirst) {
  EngineOptions opts;
  opts.on_merge = [&](const CheckpointState& s) {
    for (std::size_t i = 1; i < s.open.size(); ++i) ASSERT_GE(s.open[i - 1].level(), s.open[i].level());
  };
  closed_run(Rational(1, 3), 5, Mode::strong, opts);
}

TEST(Engine, UnclosedAtLevelCap) {
  const auto r = run(Rational(1, 3), 3, Mode::plain);
  const auto& u = std::get<UnclosedReport>(*r.outcome);
  EXPECT_EQ(u.failed.display(), "2221");
  EXPECT_EQ(u.depth_cap, 9);
  EXPECT_FALSE(u.critical_depth);
  ASSERT_FALSE(u.open.empty());
  EXPECT_EQ(u.open.front(), u.failed);
}

TEST(Engine, UnclosedStrongReportsCriticalDepth) {
  const auto r = run(Rational(1, 3), 4, Mode::strong);
  const auto& u = std::get<UnclosedReport>(*r.outcome);
  EXPECT_EQ(u.failed.level(), 4);
}

TEST(Engine, ArgumentValidation) {
  EXPECT_THROW(run(Rational(0, 1), 3, Mode::plain), std::invalid_argument);
  EXPECT_THROW(run(Rational(1, 1), 3, Mode::plain), std::invalid_argument);
  EXPECT_THROW(run(Rational(1, 3), 0, Mode::plain), std::invalid_argument);
  EXPECT_THROW(run(Rational(1, 3), 80, Mode::plain), std::invalid_argument);
  EXPECT_THROW(run(Rational(1, 3), 43, Mode::plain), std::invalid_argument);  // depth cap 129
  EngineOptions opts;
  opts.workers = 0;
  EXPECT_THROW(run(Rational(1, 3), 3, Mode::plain, opts), std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
  int seen = 0;
  EngineOptions opts;
  opts.on_merge = [&](const CheckpointState& s) {
    const auto text = format_checkpoint(s);
    const auto back = parse_checkpoint(text);
    ASSERT_EQ(back, s);
    ASSERT_EQ(format_checkpoint(back), text);
    ++seen;
  };
  closed_run(Rational(1, 3), 5, Mode::strong, opts);
  EXPECT_GT(seen, 0);
}

TEST(Checkpoint, ResumeGivesTheSameCertificate) {
  const Rational alpha(8, 21);
  const std::string want = format_certificate(closed_run(alpha, 8, Mode::plain));
  for (std::uint64_t stop : {1u, 7u, 40u, 111u}) {
    const auto path = temp_path("resume");
    std::filesystem::remove(path);
    EngineOptions first;
    first.checkpoint = path;
    first.stop_after = stop;
    const auto partial = run(alpha, 8, Mode::plain, first);
    ASSERT_FALSE(partial.outcome) << stop;
    ASSERT_TRUE(std::filesystem::exists(path));
    EXPECT_EQ(parse_checkpoint(read_file(path)).kraft(), 1);

    EngineOptions second;
    second.checkpoint = path;
    second.workers = stop % 2 ? 4 : 1;
    const auto rest = run(alpha, 8, Mode::plain, second);
    EXPECT_TRUE(rest.resumed);
    EXPECT_EQ(format_certificate(std::get<Certificate>(*rest.outcome)), want) << stop;
    std::filesystem::remove(path);
  }
}

TEST(Checkpoint, RefusesMismatchedRun) {
  const auto path = temp_path("mismatch");
  std::filesystem::remove(path);
  EngineOptions opts;
  opts.checkpoint = path;
  opts.stop_after = 3;
  run(Rational(1, 3), 4, Mode::plain, opts);
  opts.stop_after.reset();
  EXPECT_THROW(run(Rational(2, 7), 4, Mode::plain, opts), std::runtime_error);
  EXPECT_THROW(run(Rational(1, 3), 4, Mode::strong, opts), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Checkpoint, ParseErrors) {
  EXPECT_THROW(parse_checkpoint("checkpoint v1 mode=plain alpha=1/3\nbogus 1\n"), ParseError);
  EXPECT_THROW(parse_checkpoint("checkpoint v1 mode=plain alpha=1/3\nopen 13\n"), ParseError);
  EXPECT_THROW(parse_checkpoint("certificate v1 mode=plain alpha=1/3\n"), ParseError);
  EXPECT_THROW(parse_checkpoint("checkpoint v1 mode=plain alpha=1/3\nlevel 1 2\n"), ParseError);
}

TEST(Stats, PlainReference) {
  const auto rows = stats(load_certificate(kData + "/table1.cert"));
  const std::vector<std::pair<int, std::uint64_t>> want{{1, 12}, {2, 7}, {3, 5}, {4, 3}};
  EXPECT_EQ(rows, want);
  EXPECT_EQ(stats_csv(rows), "level,count\n1,12\n2,7\n3,5\n4,3\n");
}

TEST(Stats, InitialState) {
  const auto rows = stats(CheckpointState::initial(Rational(1, 3), Mode::plain));
  const std::vector<std::pair<int, std::uint64_t>> want{{1, 6}};
  EXPECT_EQ(rows, want);
}

TEST(Stats, NonIncreasing) {
  const auto rows = stats(closed_run(Rational(9, 23), 9, Mode::strong));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].second, rows[i - 1].second);
}
