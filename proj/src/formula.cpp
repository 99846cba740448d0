#include "mixedboot/formula.hpp"

#include <cctype>
#include <vector>

#include "mixedboot/error.hpp"

namespace mixedboot {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  ModelSpec parse() {
    ModelSpec spec;
    skip_space();
    if (at_end()) fail("empty formula");
    spec.response = name();
    expect('~');

    bool have_group = false;
    bool fixed_zero = false;
    bool any_item = false;
    for (;;) {
      skip_space();
      if (peek() == '(') {
        const std::size_t clause_start = pos_;
        ++pos_;
        if (have_group) {
          throw Error(ErrorCode::MultipleGroupClauses,
                      "second random-effects clause at position " + std::to_string(clause_start));
        }
        have_group = true;
        bool random_zero = false;
        for (;;) {
          parse_term(spec.random_terms, random_zero);
          skip_space();
          if (peek() == '+') {
            ++pos_;
            continue;
          }
          break;
        }
        expect('|');
        spec.group = name();
        expect(')');
        spec.random_intercept = !random_zero;
      } else {
        parse_term(spec.fixed_terms, fixed_zero);
      }
      any_item = true;
      skip_space();
      if (at_end()) break;
      expect('+');
    }
    if (!any_item) fail("formula has no terms");
    if (!have_group) fail("formula needs one random-effects clause '( ... | group )'");
    spec.fixed_intercept = !fixed_zero;
    return spec;
  }

 private:
  void parse_term(std::vector<Term>& terms, bool& zero_seen) {
    skip_space();
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      const std::size_t start = pos_;
      const int value = integer();
      if (value == 1) return;
      if (value == 0) {
        zero_seen = true;
        return;
      }
      fail_at(start, "only 0 or 1 may appear as a literal term");
    }
    Term term;
    for (;;) {
      TermFactor factor;
      factor.column = name();
      skip_space();
      if (peek() == '^') {
        ++pos_;
        skip_space();
        const std::size_t start = pos_;
        factor.power = integer();
        if (factor.power < 1 || factor.power > 4) fail_at(start, "power must be between 1 and 4");
      }
      term.factors.push_back(std::move(factor));
      skip_space();
      if (peek() == ':') {
        ++pos_;
        continue;
      }
      break;
    }
    terms.push_back(std::move(term));
  }

  std::string name() {
    skip_space();
    const std::size_t start = pos_;
    auto first_ok = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
    auto rest_ok = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
    if (at_end() || !first_ok(peek())) fail("expected a column name");
    while (!at_end() && rest_ok(peek())) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  int integer() {
    skip_space();
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) fail("expected an integer");
    if (pos_ - start > 6) fail_at(start, "integer too large");
    return std::stoi(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const { fail_at(pos_, what); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& what) const {
    throw Error(ErrorCode::SyntaxError, what + " at position " + std::to_string(at));
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

ModelSpec parse_formula(const std::string& text) { return Parser(text).parse(); }

}  // namespace mixedboot
