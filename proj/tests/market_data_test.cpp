#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_util.hpp"
#include "traitfolio/market_data.hpp"

using namespace traitfolio;
using std::chrono::year_month;

namespace {

IndexSeries make(std::vector<double> v) {
  return IndexSeries(IndexName::Stocks, kDefaultStart, std::move(v));
}

std::filesystem::path write(const TempDir& dir, const std::string& name, const std::string& text) {
  const auto path = dir / name;
  io::write_file(path, text);
  return path;
}

}  // namespace

TEST(IndexSeries, RejectsEmptyAndNonPositive) {
  EXPECT_THROW(make({}), DomainError);
  EXPECT_THROW(make({1.0, 0.0}), DomainError);
  EXPECT_THROW(make({1.0, -2.0}), DomainError);
}

TEST(IndexSeries, NormalizedStartsAtOne) {
  const auto s = make({3.7, 4.1, 2.2}).normalized();
  EXPECT_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 4.1 / 3.7);
}

TEST(IngestCsv, NormalizesByFirstValue) {
  TempDir dir;
  const auto path =
      write(dir, "s.csv", "date,value\n2000-01-01,100\n2000-02-01,110\n2000-03-01,121\n");
  const auto s = ingest_csv(path, IndexName::Stocks);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_NEAR(s[1], 1.1, 1e-15);
  EXPECT_NEAR(s[2], 1.21, 1e-15);
  EXPECT_EQ(s.start(), year_month(std::chrono::year{2000}, std::chrono::January));
}

TEST(IngestCsv, SingleRow) {
  TempDir dir;
  const auto s = ingest_csv(write(dir, "s.csv", "date,value\n1992-01-01,57.3\n"),
                            IndexName::Property);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], 1.0);
}

TEST(IngestCsv, ZeroLevelIsDomainError) {
  TempDir dir;
  const auto path = write(dir, "s.csv", "date,value\n2000-01-01,100\n2000-02-01,0\n");
  EXPECT_THROW(ingest_csv(path, IndexName::Stocks), DomainError);
}

TEST(IngestCsv, MalformedRowReportsLine) {
  TempDir dir;
  const auto path = write(dir, "s.csv", "date,value\n2000-01-01,100\n2000-02-01;101\n");
  try {
    ingest_csv(path, IndexName::Stocks);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ingest_csv(write(dir, "b.csv", "date,value\n2000-13-01,1\n"), IndexName::Stocks),
               ParseError);
  EXPECT_THROW(ingest_csv(write(dir, "c.csv", "when,level\n2000-01-01,1\n"), IndexName::Stocks),
               ParseError);
}

TEST(IngestCsv, GapIsCadenceError) {
  TempDir dir;
  const auto path = write(dir, "s.csv", "date,value\n2000-01-01,100\n2000-03-01,101\n");
  EXPECT_THROW(ingest_csv(path, IndexName::Stocks), CadenceError);
  const auto back = write(dir, "t.csv", "date,value\n2000-02-01,100\n2000-01-01,101\n");
  EXPECT_THROW(ingest_csv(back, IndexName::Stocks), CadenceError);
}

TEST(IngestCsv, SameMonthKeepsLastObservation) {
  TempDir dir;
  const auto path = write(
      dir, "s.csv", "date,value\n2000-01-03,100\n2000-01-31,200\n2000-02-29,300\n");
  const auto s = ingest_csv(path, IndexName::Stocks);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[1], 1.5);
}

TEST(IngestCsv, RoundTripIsIdentityOnWrittenText) {
  TempDir dir;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto original =
        synthesize_series({0.05, 0.2, 40, rng()}, IndexName::Stocks, kDefaultStart);
    const auto path = dir / "rt.csv";
    write_csv(original, path);
    const auto once = ingest_csv(path, IndexName::Stocks);
    const std::string text = series_to_csv(once);
    write_csv(once, path);
    const auto twice = ingest_csv(path, IndexName::Stocks);
    EXPECT_EQ(series_to_csv(twice), text);
    EXPECT_EQ(once.values(), twice.values());
    EXPECT_EQ(once.start(), original.start());
    for (std::size_t t = 0; t < original.size(); ++t) {
      EXPECT_NEAR(once[t], original[t], 1e-11 * original[t]);
    }
  }
}

TEST(Synthesize, ZeroVolatilityIsExponential) {
  const double drift = 0.07;
  const auto s = synthesize_series({drift, 0.0, 13, 5}, IndexName::Stocks);
  ASSERT_EQ(s.size(), 13u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_NEAR(s[12], std::exp(drift), 1e-12);
}

TEST(Synthesize, DeterministicPerSeed) {
  const SyntheticSpec spec{0.07, 0.15, 120, 42};
  EXPECT_EQ(synthesize_series(spec, IndexName::Stocks).values(),
            synthesize_series(spec, IndexName::Stocks).values());
  SyntheticSpec other = spec;
  other.seed = 43;
  EXPECT_NE(synthesize_series(spec, IndexName::Stocks).values(),
            synthesize_series(other, IndexName::Stocks).values());
}

TEST(Synthesize, RejectsBadSpec) {
  EXPECT_THROW(synthesize_series({0.0, 0.1, 0, 1}, IndexName::Stocks), DomainError);
  EXPECT_THROW(synthesize_series({0.0, -0.1, 10, 1}, IndexName::Stocks), DomainError);
}

TEST(Macd, ConstantSeriesIsZero) {
  const auto s = make(std::vector<double>(60, 2.5));
  for (std::size_t t = 0; t < s.size(); ++t) EXPECT_EQ(macd(s, t), 0.0);
}

TEST(Macd, TwoPointHandValue) {
  const auto s = make({1.0, 2.0});
  const double fast = 1.0 + (2.0 / 13.0);
  const double slow = 1.0 + (2.0 / 27.0);
  EXPECT_NEAR(macd(s, 1), slow - fast, 1e-15);
  EXPECT_NEAR(macd(s, 1), -0.0798, 1e-4);
}

TEST(Macd, IncreasingRampIsNegative) {
  std::vector<double> ramp;
  for (int i = 0; i < 120; ++i) ramp.push_back(1.0 + 0.01 * i);
  const auto s = make(ramp);
  // brute-force EMAs from the closed form
  const double expected = oracle::ema_closed_form(ramp, 100, 26) - oracle::ema_closed_form(ramp, 100, 12);
  EXPECT_LT(expected, 0.0);
  EXPECT_NEAR(macd(s, 100), expected, 1e-12);
}

TEST(Macd, OutOfRangeThrows) {
  EXPECT_THROW(macd(make({1.0, 2.0}), 2), BoundsError);
}

TEST(Ema, MatchesClosedFormOnRandomSeries) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = synthesize_series({0.05, 0.3, 60, rng()}, IndexName::Stocks);
    for (int window : {12, 26}) {
      const auto ema = ema_series(s, window);
      for (std::size_t t = 0; t < s.size(); t += 7) {
        ASSERT_NEAR(ema[t], oracle::ema_closed_form(s.values(), t, window), 1e-10);
      }
    }
  }
}

TEST(Rsi, ConventionCases) {
  EXPECT_EQ(rsi(make({1, 2, 3, 4, 5}), 4, 4), 100.0);
  EXPECT_EQ(rsi(make({5, 4, 3, 2, 1}), 4, 4), 0.0);
  EXPECT_EQ(rsi(make({2, 2, 2, 2}), 3, 3), 50.0);
  EXPECT_DOUBLE_EQ(rsi(make({1, 2, 1, 2, 1}), 4, 4), 50.0);
}

TEST(Rsi, HandValue) {
  // changes +2, -1, +1 -> P = 3/3, N = 1/3 -> 100 - 100 / (1 + 3) = 75
  EXPECT_NEAR(rsi(make({1, 3, 2, 3}), 3, 3), 75.0, 1e-12);
}

TEST(Rsi, PreconditionsEnforced) {
  EXPECT_THROW(rsi(make({1, 2, 3}), 1, 2), BoundsError);
  EXPECT_THROW(rsi(make({1, 2, 3}), 2, 0), DomainError);
}

TEST(Rsi, AlwaysInRange) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto market = synthesize_market(80, rng());
    const auto frame = compute_indicators(market, 1 + trial % 20);
    for (const auto& series : frame.rsi) {
      for (double v : series) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 100.0);
      }
    }
  }
}

TEST(Indicators, FrameMatchesPointwiseOperations) {
  const auto market = synthesize_market(60, 3);
  const auto frame = compute_indicators(market, 14);
  ASSERT_EQ(frame.size(), 60u);
  EXPECT_EQ(frame.rsi[0][0], 50.0);  // empty warm-up window
  for (std::size_t t = 14; t < 60; ++t) {
    EXPECT_NEAR(frame.macd[1][t], macd(market.property, t), 1e-13);
    EXPECT_DOUBLE_EQ(frame.rsi[2][t], rsi(market.interest, t, 14));
  }
  const auto csv = indicators_to_csv(frame);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kIndicatorHeader);
  EXPECT_EQ(io::lines(csv).size(), 61u);
}
