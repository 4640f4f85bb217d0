// Copyright 2026 The Remediate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "remediate/lp_format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "remediate/csv.hpp"
#include "remediate/error.hpp"

namespace remediate::lp {
namespace {

constexpr std::size_t kTermsPerLine = 6;

std::string number(double v) { return csv::format_double(v, 17); }

void write_expression(std::ostringstream& out, const std::vector<Term>& terms) {
  for (std::size_t n = 0; n < terms.size(); ++n) {
    if (n > 0 && n % kTermsPerLine == 0) out << "\n   ";
    const double c = terms[n].coef;
    out << ' ' << (std::signbit(c) ? '-' : '+') << ' ' << number(std::fabs(c)) << ' '
        << terms[n].var;
  }
}

const char* sense_token(RowSense s) {
  switch (s) {
    case RowSense::kLessEqual:
      return "<=";
    case RowSense::kGreaterEqual:
      return ">=";
    case RowSense::kEqual:
      return "=";
  }
  return "=";
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '\\') {  // comment to end of line
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    if (ch == '<' || ch == '>' || ch == '=') {
      std::string t(1, ch);
      ++i;
      if (i < text.size() && text[i] == '=') {
        if (ch != '=') t.push_back('=');
        ++i;
      }
      if (t == "<") t = "<=";
      if (t == ">") t = ">=";
      tokens.push_back(t);
      continue;
    }
    if (ch == '+' || ch == '-') {
      tokens.emplace_back(1, ch);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
           text[j] != '<' && text[j] != '>' && text[j] != '=' &&
           !((text[j] == '+' || text[j] == '-') && j > i &&
             !(text[j - 1] == 'e' || text[j - 1] == 'E') )) {
      ++j;
    }
    tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::optional<double> as_number(const std::string& t) {
  if (t.empty()) return std::nullopt;
  const char c0 = t[0];
  if (!(std::isdigit(static_cast<unsigned char>(c0)) || c0 == '.')) {
    std::string lower = t;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower == "inf" || lower == "infinity") return std::numeric_limits<double>::infinity();
    return std::nullopt;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

bool is_sense(const std::string& t) { return t == "<=" || t == ">=" || t == "="; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  return s;
}

bool is_section(const std::vector<std::string>& tok, std::size_t i) {
  const std::string t = lower(tok[i]);
  if (t == "bounds" || t == "binary" || t == "binaries" || t == "bin" || t == "general" ||
      t == "generals" || t == "end" || t == "minimize" || t == "maximize" || t == "minimise" ||
      t == "maximise")
    return true;
  if (t == "subject" && i + 1 < tok.size() && lower(tok[i + 1]) == "to") return true;
  return t == "st" || t == "s.t.";
}

class Parser {
 public:
  explicit Parser(std::vector<std::string> tokens) : tok_(std::move(tokens)) {}

  Model parse() {
    Model model;
    expect_objective_header(model);
    parse_objective(model);
    while (pos_ < tok_.size()) {
      const std::string t = lower(tok_[pos_]);
      if (t == "subject") {
        pos_ += 2;
        parse_rows(model);
      } else if (t == "st" || t == "s.t.") {
        ++pos_;
        parse_rows(model);
      } else if (t == "bounds") {
        ++pos_;
        parse_bounds(model);
      } else if (t == "binary" || t == "binaries" || t == "bin") {
        ++pos_;
        while (pos_ < tok_.size() && !is_section(tok_, pos_)) model.binaries.push_back(tok_[pos_++]);
      } else if (t == "end") {
        return model;
      } else {
        throw DataError("LP: unexpected token '" + tok_[pos_] + "'");
      }
    }
    throw DataError("LP: missing End");
  }

 private:
  void expect_objective_header(Model& model) {
    if (pos_ >= tok_.size()) throw DataError("LP: empty file");
    const std::string t = lower(tok_[pos_++]);
    if (t == "minimize" || t == "minimise") {
      model.sense = Sense::kMinimize;
    } else if (t == "maximize" || t == "maximise") {
      model.sense = Sense::kMaximize;
    } else {
      throw DataError("LP: expected Minimize or Maximize, found '" + t + "'");
    }
  }

  // [name:] expression, stopping at a section keyword or a sense token.
  std::vector<Term> parse_expression(double* constant) {
    std::vector<Term> terms;
    while (pos_ < tok_.size() && !is_sense(tok_[pos_]) && !is_section(tok_, pos_)) {
      if (is_row_name(pos_)) break;
      double sign = 1.0;
      while (tok_[pos_] == "+" || tok_[pos_] == "-") {
        if (tok_[pos_] == "-") sign = -sign;
        ++pos_;
        if (pos_ >= tok_.size()) throw DataError("LP: dangling sign");
      }
      double coef = 1.0;
      if (auto n = as_number(tok_[pos_])) {
        coef = *n;
        ++pos_;
        const bool var_follows = pos_ < tok_.size() && !is_sense(tok_[pos_]) &&
                                 tok_[pos_] != "+" && tok_[pos_] != "-" &&
                                 !is_section(tok_, pos_) && !is_row_name(pos_) &&
                                 !as_number(tok_[pos_]);
        if (!var_follows) {
          if (constant == nullptr) throw DataError("LP: constant term inside a row expression");
          *constant += sign * coef;
          continue;
        }
      }
      terms.push_back({tok_[pos_++], sign * coef});
    }
    return terms;
  }

  bool is_row_name(std::size_t i) const {
    const std::string& t = tok_[i];
    return t.size() > 1 && t.back() == ':';
  }

  void parse_objective(Model& model) {
    if (pos_ < tok_.size() && is_row_name(pos_)) {
      model.objective_name = tok_[pos_].substr(0, tok_[pos_].size() - 1);
      ++pos_;
    }
    model.objective = parse_expression(&model.objective_constant);
  }

  void parse_rows(Model& model) {
    while (pos_ < tok_.size() && !is_section(tok_, pos_)) {
      Row row;
      if (is_row_name(pos_)) {
        row.name = tok_[pos_].substr(0, tok_[pos_].size() - 1);
        ++pos_;
      } else {
        row.name = "R" + std::to_string(model.rows.size() + 1);
      }
      row.terms = parse_expression(nullptr);
      if (pos_ >= tok_.size() || !is_sense(tok_[pos_])) {
        throw DataError("LP: row '" + row.name + "' has no sense");
      }
      const std::string s = tok_[pos_++];
      row.sense = s == "<=" ? RowSense::kLessEqual
                            : (s == ">=" ? RowSense::kGreaterEqual : RowSense::kEqual);
      row.rhs = read_signed_number("row '" + row.name + "'");
      model.rows.push_back(std::move(row));
    }
  }

  double read_signed_number(const std::string& what) {
    double sign = 1.0;
    while (pos_ < tok_.size() && (tok_[pos_] == "+" || tok_[pos_] == "-")) {
      if (tok_[pos_] == "-") sign = -sign;
      ++pos_;
    }
    if (pos_ >= tok_.size()) throw DataError("LP: " + what + " missing number");
    auto n = as_number(tok_[pos_]);
    if (!n) throw DataError("LP: " + what + " expected number, found '" + tok_[pos_] + "'");
    ++pos_;
    return sign * *n;
  }

  bool number_ahead() const {
    std::size_t i = pos_;
    while (i < tok_.size() && (tok_[i] == "+" || tok_[i] == "-")) ++i;
    return i < tok_.size() && as_number(tok_[i]).has_value();
  }

  void parse_bounds(Model& model) {
    while (pos_ < tok_.size() && !is_section(tok_, pos_)) {
      Bound b;
      if (number_ahead()) {
        // lo <= x [<= hi]
        const double lo = read_signed_number("bound");
        if (pos_ >= tok_.size() || tok_[pos_] != "<=") throw DataError("LP: malformed bound");
        ++pos_;
        b.var = tok_.at(pos_++);
        b.lower = lo;
        if (pos_ < tok_.size() && tok_[pos_] == "<=") {
          ++pos_;
          b.upper = read_signed_number("bound");
        }
      } else {
        b.var = tok_.at(pos_++);
        if (pos_ < tok_.size() && lower(tok_[pos_]) == "free") {
          ++pos_;
          b.lower = -std::numeric_limits<double>::infinity();
        } else {
          if (pos_ >= tok_.size() || !is_sense(tok_[pos_])) throw DataError("LP: malformed bound");
          const std::string s = tok_[pos_++];
          const double v = read_signed_number("bound");
          if (s == ">=") b.lower = v;
          if (s == "<=") b.upper = v;
          if (s == "=") b.lower = b.upper = v;
        }
      }
      model.bounds.push_back(std::move(b));
    }
  }

  std::vector<std::string> tok_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string write(const Model& model) {
  std::ostringstream out;
  out << (model.sense == Sense::kMinimize ? "Minimize" : "Maximize") << '\n';
  out << ' ' << model.objective_name << ':';
  write_expression(out, model.objective);
  if (model.objective_constant != 0.0) {
    out << ' ' << (std::signbit(model.objective_constant) ? '-' : '+') << ' '
        << number(std::fabs(model.objective_constant));
  }
  out << "\nSubject To\n";
  for (const auto& row : model.rows) {
    out << ' ' << row.name << ':';
    write_expression(out, row.terms);
    out << ' ' << sense_token(row.sense) << ' ' << number(row.rhs) << '\n';
  }
  out << "Bounds\n";
  for (const auto& b : model.bounds) {
    if (b.lower && b.upper) {
      out << ' ' << number(*b.lower) << " <= " << b.var << " <= " << number(*b.upper) << '\n';
    } else if (b.lower) {
      out << ' ' << b.var << " >= " << number(*b.lower) << '\n';
    } else if (b.upper) {
      out << ' ' << b.var << " <= " << number(*b.upper) << '\n';
    }
  }
  if (!model.binaries.empty()) {
    out << "Binary\n";
    for (std::size_t n = 0; n < model.binaries.size(); ++n) {
      out << (n % kTermsPerLine == 0 ? (n ? "\n " : " ") : " ") << model.binaries[n];
    }
    out << '\n';
  }
  out << "End\n";
  return out.str();
}

Model read(std::string_view text) { return Parser(tokenize(text)).parse(); }

double objective_value(const Model& model, const Assignment& values) {
  double acc = model.objective_constant;
  for (const auto& t : model.objective) {
    auto it = values.find(t.var);
    if (it != values.end()) acc += t.coef * it->second;
  }
  return acc;
}

double row_activity(const Row& row, const Assignment& values) {
  double acc = 0.0;
  for (const auto& t : row.terms) {
    auto it = values.find(t.var);
    if (it != values.end()) acc += t.coef * it->second;
  }
  return acc;
}

double max_violation(const Model& model, const Assignment& values) {
  double worst = 0.0;
  for (const auto& row : model.rows) {
    const double a = row_activity(row, values);
    switch (row.sense) {
      case RowSense::kLessEqual:
        worst = std::max(worst, a - row.rhs);
        break;
      case RowSense::kGreaterEqual:
        worst = std::max(worst, row.rhs - a);
        break;
      case RowSense::kEqual:
        worst = std::max(worst, std::fabs(a - row.rhs));
        break;
    }
  }
  auto value = [&](const std::string& v) {
    auto it = values.find(v);
    return it == values.end() ? 0.0 : it->second;
  };
  for (const auto& b : model.bounds) {
    const double v = value(b.var);
    if (b.lower) worst = std::max(worst, *b.lower - v);
    if (b.upper) worst = std::max(worst, v - *b.upper);
  }
  for (const auto& name : model.binaries) {
    const double v = value(name);
    worst = std::max(worst, std::min(std::fabs(v), std::fabs(v - 1.0)));
  }
  return worst;
}

std::string sanitize_name(std::string_view raw) {
  std::string out(raw);
  for (char& ch : out) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')) ch = '_';
  }
  return out;
}

}  // namespace remediate::lp
