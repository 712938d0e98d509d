#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "ttx/survey.hpp"

using namespace ttx;
using ttx::test::make_row;

namespace {

const std::string kHeader = "Y,X1,X2,X3,X4,X5,X6,X7,X8,X9,X10,X11,X12,X13,X14,X15,X16,X17,X18,X19\n";

std::string row_line(const std::string& x2 = "0", const std::string& x11 = "4", const std::string& comment = "\"ok\"") {
  return "5,1," + x2 + ",0,1,4,4,4,4,4,4," + x11 + ",4,4,4,4,4,4,4," + comment + "\n";
}

}  // namespace

TEST(Survey, AcceptsInRangeRow) {
  auto r = parse_survey_csv(kHeader + row_line());
  ASSERT_TRUE(r.ok()) << r.errors.front();
  ASSERT_EQ(r.rows.size(), 1u);
  const auto& row = r.rows[0];
  EXPECT_EQ(row.y, 5.0);
  EXPECT_EQ(row.var(1), 1.0);
  EXPECT_EQ(row.var(2), 0.0);
  EXPECT_EQ(row.var(4), 1.0);
  for (int k = 5; k <= 18; ++k) EXPECT_EQ(row.var(k), 4.0);
  EXPECT_EQ(row.comment, "ok");
}

TEST(Survey, BinaryRangeError) {
  auto r = parse_survey_csv(kHeader + row_line("3"));
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_NE(r.errors[0].find("X2 must be 0 or 1"), std::string::npos) << r.errors[0];
  EXPECT_NE(r.errors[0].find("row 1"), std::string::npos);
  EXPECT_TRUE(r.rows.empty());
}

TEST(Survey, ScaleRangeError) {
  auto r = parse_survey_csv(kHeader + row_line("0", "6"));
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_NE(r.errors[0].find("X11 must be in [0,5]"), std::string::npos) << r.errors[0];
}

TEST(Survey, EveryColumnRangeEnforced) {
  for (std::size_t col = 0; col < 19; ++col) {
    SurveyResponse r = make_row(3, {1, 0, 1, 0, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3});
    const double bad = col >= 1 && col <= 4 ? 0.5 : (col % 2 ? -0.1 : 5.1);
    if (col == 0) r.y = bad;
    else r.x[col - 1] = bad;
    auto errs = validate_response(r);
    ASSERT_EQ(errs.size(), 1u) << col;
    EXPECT_EQ(errs[0].rfind(survey_column_name(col) + " must", 0), 0u) << errs[0];
  }
  auto nan = make_row(std::nan(""), {});
  EXPECT_FALSE(validate_response(nan).empty());
}

TEST(Survey, ColumnCountAndNumbers) {
  auto r = parse_survey_csv(kHeader + "5,1,0\n" + "5,1,zero,0,1,4,4,4,4,4,4,4,4,4,4,4,4,4,4,x\n");
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.errors[0], "row 1: expected 20 columns, got 3");
  EXPECT_EQ(r.errors[1], "row 2: X2 is not a number");
}

TEST(Survey, HeaderChecked) {
  auto r = parse_survey_csv("Y,X1,X2\n1,0,0\n");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.errors[0], "header must be Y,X1,...,X19");
  EXPECT_FALSE(parse_survey_csv("").ok());
}

TEST(Survey, QuotedFreeText) {
  auto r = parse_survey_csv(kHeader + row_line("0", "4", "\"more drills, please; \"\"really\"\"\nline two\""));
  ASSERT_TRUE(r.ok()) << r.errors.front();
  EXPECT_EQ(r.rows[0].comment, "more drills, please; \"really\"\nline two");
}

TEST(Survey, CrlfAndTrailingBlankLine) {
  std::string text = kHeader + row_line() + row_line();
  std::string crlf;
  for (char c : text) {
    if (c == '\n') crlf += "\r\n";
    else crlf += c;
  }
  auto r = parse_survey_csv(crlf + "\r\n");
  ASSERT_TRUE(r.ok()) << r.errors.front();
  EXPECT_EQ(r.rows.size(), 2u);
}

TEST(Survey, PropertyCsvRoundTrip) {
  std::mt19937_64 rng(3);
  std::vector<SurveyResponse> rows;
  const char* comments[] = {"", "plain", "with, comma", "with \"quotes\"", "multi\nline"};
  for (int i = 0; i < 60; ++i) {
    auto r = ttx::test::random_row(rng);
    r.comment = comments[i % 5];
    r.y = std::uniform_real_distribution<double>(0, 5)(rng);  // full double precision
    rows.push_back(r);
  }
  auto parsed = parse_survey_csv(to_survey_csv(rows));
  ASSERT_TRUE(parsed.ok());
  EXPECT_EQ(parsed.rows, rows);
}

TEST(Survey, UnterminatedQuote) {
  EXPECT_THROW(parse_survey_csv(kHeader + "5,1,0,0,1,4,4,4,4,4,4,4,4,4,4,4,4,4,4,\"open\n"), Error);
}
