#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ttx/error.hpp"

namespace ttx {

inline constexpr std::size_t kSurveyNumericVars = 18;  // X1..X18
inline constexpr std::size_t kSurveyBinaryVars = 4;    // X1..X4
inline constexpr std::size_t kSurveyColumns = 20;      // Y, X1..X19

/// One respondent's answers. `x[k]` holds X(k+1); X1-X4 are 0/1, the rest
/// of the numeric answers lie in [0,5]. X19 is the free-text comment.
struct SurveyResponse {
  double y = 0.0;
  std::array<double, kSurveyNumericVars> x{};
  std::string comment;

  double var(std::size_t k) const { return x.at(k - 1); }  // 1-based, X1..X18

  bool operator==(const SurveyResponse&) const = default;
};

inline std::string survey_column_name(std::size_t col) {
  return col == 0 ? "Y" : "X" + std::to_string(col);
}

/// Range violations for one response, each prefixed with `where`.
inline std::vector<std::string> validate_response(const SurveyResponse& r, const std::string& where = "") {
  std::vector<std::string> errors;
  auto prefix = where.empty() ? std::string() : where + ": ";
  auto in_scale = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 5.0; };
  if (!in_scale(r.y)) errors.push_back(prefix + "Y must be in [0,5]");
  for (std::size_t k = 1; k <= kSurveyNumericVars; ++k) {
    double v = r.var(k);
    if (k <= kSurveyBinaryVars) {
      if (v != 0.0 && v != 1.0) errors.push_back(prefix + "X" + std::to_string(k) + " must be 0 or 1");
    } else if (!in_scale(v)) {
      errors.push_back(prefix + "X" + std::to_string(k) + " must be in [0,5]");
    }
  }
  return errors;
}

namespace detail {

// RFC 4180 style: comma separated, double-quoted fields with "" escapes,
// quoted fields may span lines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) fail(ErrorCode::Schema, "unterminated quoted field in survey table");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline bool parse_number(const std::string& s, double& out) {
  auto t = trim(s);
  if (t.empty()) return false;
  auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

}  // namespace detail

struct SurveyParseResult {
  std::vector<SurveyResponse> rows;
  std::vector<std::string> errors;  // "row N, Xk: ..." addressed

  bool ok() const { return errors.empty(); }
};

/// Parses the survey table: header `Y,X1,...,X19`, one respondent per row.
/// Row numbers in diagnostics are 1-based data rows (the header is row 0).
inline SurveyParseResult parse_survey_csv(std::string_view text) {
  SurveyParseResult out;
  auto table = detail::parse_csv(text);
  if (table.empty()) {
    out.errors.push_back("survey table is empty");
    return out;
  }
  const auto& header = table.front();
  bool header_ok = header.size() == kSurveyColumns;
  for (std::size_t c = 0; header_ok && c < kSurveyColumns; ++c) {
    header_ok = detail::trim(header[c]) == survey_column_name(c);
  }
  if (!header_ok) {
    out.errors.push_back("header must be Y,X1,...,X19");
    return out;
  }
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& cells = table[r];
    const std::string where = "row " + std::to_string(r);
    if (cells.size() != kSurveyColumns) {
      out.errors.push_back(where + ": expected " + std::to_string(kSurveyColumns) + " columns, got " +
                           std::to_string(cells.size()));
      continue;
    }
    SurveyResponse resp;
    bool parsed = true;
    for (std::size_t c = 0; c + 1 < kSurveyColumns; ++c) {
      double v = 0.0;
      if (!detail::parse_number(cells[c], v)) {
        out.errors.push_back(where + ": " + survey_column_name(c) + " is not a number");
        parsed = false;
        continue;
      }
      if (c == 0) {
        resp.y = v;
      } else {
        resp.x[c - 1] = v;
      }
    }
    resp.comment = cells.back();
    if (!parsed) continue;
    auto errs = validate_response(resp, where);
    if (!errs.empty()) {
      out.errors.insert(out.errors.end(), errs.begin(), errs.end());
      continue;
    }
    out.rows.push_back(std::move(resp));
  }
  return out;
}

inline std::string format_survey_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string to_survey_csv(const std::vector<SurveyResponse>& rows) {
  std::string out = "Y";
  for (std::size_t k = 1; k < kSurveyColumns; ++k) out += ",X" + std::to_string(k);
  out += "\n";
  for (const auto& r : rows) {
    out += format_survey_number(r.y);
    for (double v : r.x) out += "," + format_survey_number(v);
    out += ",\"";
    for (char c : r.comment) {
      if (c == '"') out += '"';
      out += c;
    }
    out += "\"\n";
  }
  return out;
}

}  // namespace ttx
