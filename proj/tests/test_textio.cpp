#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "mtlsa/errors.hpp"
#include "mtlsa/matrix.hpp"
#include "mtlsa/textio.hpp"

using namespace mtlsa;
namespace fs = std::filesystem;

TEST(TextIo, FormatDoubleRoundTripsBitExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    const double back = textio::parse_double(textio::format_double(v));
    EXPECT_EQ(std::memcmp(&v, &back, sizeof v), 0) << textio::format_double(v);
  }
  EXPECT_EQ(textio::format_double(0.5), "0.5");
  EXPECT_EQ(textio::format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_TRUE(std::isnan(textio::parse_double("nan")));
  EXPECT_EQ(textio::parse_double("inf"), std::numeric_limits<double>::infinity());
}

TEST(TextIo, StrictNumberParsing) {
  EXPECT_THROW(textio::parse_double("1.5x"), std::invalid_argument);
  EXPECT_THROW(textio::parse_double(""), std::invalid_argument);
  EXPECT_THROW(textio::parse_uint("-3"), std::invalid_argument);
  EXPECT_EQ(textio::parse_int("-3"), -3);
  EXPECT_EQ(textio::parse_uint("42"), 42u);
}

TEST(TextIo, SplitTrimJoin) {
  EXPECT_EQ(textio::split("a,,b", ','), (std::vector<std::string>{"a", "", "b"}));
  EXPECT_EQ(textio::trim("  x y \t"), "x y");
  EXPECT_EQ(textio::join({"p", "q"}, ' '), "p q");
}

TEST(TextIo, KeyValuesSkipCommentsAndReportLine) {
  const auto kv = textio::parse_key_values("# note\n\nalpha = 1\nbeta=two words\n", "cfg");
  EXPECT_EQ(kv.at("alpha"), "1");
  EXPECT_EQ(kv.at("beta"), "two words");
  try {
    textio::parse_key_values("a = 1\nbroken\n", "cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(TextIo, AtomicWriteLeavesNoPartialFile) {
  const fs::path dir = fs::temp_directory_path() / "mtlsa_textio_test";
  fs::create_directories(dir);
  const auto file = dir / "x.txt";
  textio::write_file_atomic(file, "hello\n");
  EXPECT_EQ(textio::read_file(file), "hello\n");
  EXPECT_FALSE(fs::exists(dir / "x.txt.partial"));
  EXPECT_THROW(textio::read_file(dir / "missing.txt"), std::runtime_error);
  fs::remove_all(dir);
}

TEST(MatrixBasics, FromRowsRejectsRaggedInput) {
  const auto m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(m.rows(), 3u);
  EXPECT_EQ(m(2, 1), 6.0);
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), ShapeError);
  EXPECT_EQ(squared_distance(std::vector<double>{0, 0}, std::vector<double>{3, 4}), 25.0);
  EXPECT_THROW(squared_distance(std::vector<double>{0}, std::vector<double>{3, 4}), ShapeError);
}
