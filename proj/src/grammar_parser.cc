/*!
 *  Copyright (c) 2026 by Contributors
 * \file grammar_parser.cc
 * \brief Recursive-descent parser for the EBNF surface syntax (see docs/grammar-format.md).
 */
#include <cctype>
#include <limits>

#include "gramdash/grammar.h"

namespace gramdash {

namespace {

class EbnfParser {
 public:
  explicit EbnfParser(std::string_view text) : text_(text) {}

  Grammar Parse() {
    std::vector<Rule> rules;
    SkipSpace();
    while (!AtEnd()) {
      std::string name = ParseIdentifier();
      SkipSpace();
      Expect("::=");
      ExprPtr body = ParseChoice();
      rules.push_back({std::move(name), std::move(body)});
      SkipSpace();
    }
    if (rules.empty()) Fail("grammar has no rules");
    std::string root = rules.front().name;
    for (const auto& r : rules) {
      if (r.name == "root") root = "root";
    }
    for (size_t i = 0; i < rules.size(); ++i) {
      for (size_t j = 0; j < i; ++j) {
        if (rules[i].name == rules[j].name) {
          throw Error(ErrorKind::kInvalidGrammar, "duplicate rule name '" + rules[i].name + "'");
        }
      }
    }
    return Grammar(std::move(rules), root);
  }

 private:
  [[noreturn]] void Fail(const std::string& message) const {
    int line = 1, column = 1;
    for (size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SyntaxError(line, column, message);
  }

  bool AtEnd() const { return pos_ >= text_.size(); }
  char Peek(size_t offset = 0) const {
    return pos_ + offset < text_.size() ? text_[pos_ + offset] : '\0';
  }

  void SkipSpace() {
    while (!AtEnd()) {
      char c = Peek();
      if (c == '#') {
        while (!AtEnd() && Peek() != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  void Expect(std::string_view token) {
    if (text_.substr(pos_, token.size()) != token) {
      Fail("expected '" + std::string(token) + "'");
    }
    pos_ += token.size();
  }

  static bool IsIdentStart(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool IsIdentChar(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  }

  std::string ParseIdentifier() {
    if (!IsIdentStart(Peek())) Fail("expected rule name");
    size_t start = pos_;
    while (!AtEnd() && IsIdentChar(Peek())) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  // True when the upcoming text is `identifier ::=`, i.e. the start of the next rule.
  bool AtRuleStart() const {
    size_t p = pos_;
    if (p >= text_.size() || !IsIdentStart(text_[p])) return false;
    while (p < text_.size() && IsIdentChar(text_[p])) ++p;
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) ++p;
    return text_.substr(p, 3) == "::=";
  }

  ExprPtr ParseChoice() {
    std::vector<ExprPtr> alternatives;
    alternatives.push_back(ParseSequence());
    SkipSpace();
    while (Peek() == '|') {
      ++pos_;
      alternatives.push_back(ParseSequence());
      SkipSpace();
    }
    return RuleExpr::Choice(std::move(alternatives));
  }

  ExprPtr ParseSequence() {
    std::vector<ExprPtr> items;
    while (true) {
      SkipSpace();
      char c = Peek();
      if (AtEnd() || c == '|' || c == ')' || c == ',' || c == ';' || AtRuleStart()) break;
      ExprPtr item = ParsePostfix();
      if (item->kind != ExprKind::kEmpty) items.push_back(std::move(item));
    }
    return RuleExpr::Sequence(std::move(items));
  }

  int64_t ParseCount() {
    SkipSpace();
    if (!std::isdigit(static_cast<unsigned char>(Peek()))) Fail("expected repetition count");
    int64_t value = 0;
    while (std::isdigit(static_cast<unsigned char>(Peek()))) {
      value = value * 10 + (Peek() - '0');
      if (value > std::numeric_limits<int32_t>::max()) Fail("repetition count too large");
      ++pos_;
    }
    return value;
  }

  ExprPtr ParsePostfix() {
    ExprPtr atom = ParseAtom();
    while (true) {
      char c = Peek();
      if (c == '*') {
        ++pos_;
        atom = RuleExpr::Repeat(atom, 0, kUnbounded);
      } else if (c == '+') {
        ++pos_;
        atom = RuleExpr::Repeat(atom, 1, kUnbounded);
      } else if (c == '?') {
        ++pos_;
        atom = RuleExpr::Choice({atom, RuleExpr::Empty()});
      } else if (c == '{') {
        ++pos_;
        int64_t min = ParseCount();
        int64_t max = min;
        SkipSpace();
        if (Peek() == ',') {
          ++pos_;
          SkipSpace();
          max = Peek() == '}' ? kUnbounded : ParseCount();
        }
        SkipSpace();
        Expect("}");
        if (max != kUnbounded && max < min) Fail("repetition min exceeds max");
        atom = RuleExpr::Repeat(atom, min, max);
      } else {
        break;
      }
    }
    return atom;
  }

  static int HexValue(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  static void AppendUtf8(std::string* out, uint32_t cp) {
    if (cp < 0x80) {
      *out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      *out += static_cast<char>(0xC0 | (cp >> 6));
      *out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      *out += static_cast<char>(0xE0 | (cp >> 12));
      *out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      *out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      *out += static_cast<char>(0xF0 | (cp >> 18));
      *out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      *out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      *out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  // Parses one possibly-escaped character; multi-byte escapes (\u) are appended to `out`.
  void ParseChar(std::string* out) {
    if (AtEnd()) Fail("unterminated literal");
    char c = Peek();
    ++pos_;
    if (c != '\\') {
      *out += c;
      return;
    }
    if (AtEnd()) Fail("unterminated escape");
    char e = Peek();
    ++pos_;
    switch (e) {
      case 'n':
        *out += '\n';
        return;
      case 't':
        *out += '\t';
        return;
      case 'r':
        *out += '\r';
        return;
      case '0':
        *out += '\0';
        return;
      case 'x': {
        int hi = HexValue(Peek()), lo = HexValue(Peek(1));
        if (hi < 0 || lo < 0) Fail("bad \\x escape");
        pos_ += 2;
        *out += static_cast<char>(hi * 16 + lo);
        return;
      }
      case 'u': {
        uint32_t cp = 0;
        for (int i = 0; i < 4; ++i) {
          int v = HexValue(Peek());
          if (v < 0) Fail("bad \\u escape");
          cp = cp * 16 + v;
          ++pos_;
        }
        AppendUtf8(out, cp);
        return;
      }
      default:
        *out += e;
        return;
    }
  }

  std::string ParseStringLiteral() {
    char quote = Peek();
    ++pos_;
    std::string value;
    while (Peek() != quote) {
      if (AtEnd() || Peek() == '\n') Fail("unterminated string literal");
      ParseChar(&value);
    }
    ++pos_;
    return value;
  }

  uint8_t ParseClassByte() {
    std::string ch;
    size_t start = pos_;
    ParseChar(&ch);
    if (ch.size() != 1) {
      pos_ = start;
      Fail("char class elements must be single bytes");
    }
    return static_cast<uint8_t>(ch[0]);
  }

  ExprPtr ParseCharClass() {
    Expect("[");
    bool negated = false;
    if (Peek() == '^') {
      negated = true;
      ++pos_;
    }
    std::vector<ByteRange> ranges;
    while (Peek() != ']') {
      if (AtEnd()) Fail("unterminated char class");
      uint8_t lower = ParseClassByte();
      uint8_t upper = lower;
      if (Peek() == '-' && Peek(1) != ']') {
        ++pos_;
        upper = ParseClassByte();
        if (upper < lower) Fail("inverted byte range");
      }
      ranges.push_back({lower, upper});
    }
    ++pos_;
    return RuleExpr::CharClass(std::move(ranges), negated);
  }

  ExprPtr ParseTagDispatch() {
    Expect("(");
    TagDispatchSpec spec;
    while (true) {
      SkipSpace();
      char c = Peek();
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == ',' || c == ';') {
        ++pos_;
        continue;
      }
      if (c == '(') {
        ++pos_;
        SkipSpace();
        if (Peek() != '"') Fail("expected tag string");
        std::string tag = ParseStringLiteral();
        SkipSpace();
        Expect(",");
        SkipSpace();
        std::string rule = ParseIdentifier();
        SkipSpace();
        Expect(")");
        spec.pairs.emplace_back(std::move(tag), std::move(rule));
        continue;
      }
      if (text_.substr(pos_, 4) == "stop") {
        pos_ += 4;
        SkipSpace();
        Expect("=");
        SkipSpace();
        if (Peek() != '"') Fail("expected stop string");
        spec.stop_strs.push_back(ParseStringLiteral());
        continue;
      }
      if (text_.substr(pos_, 4) == "loop") {
        pos_ += 4;
        SkipSpace();
        Expect("=");
        SkipSpace();
        if (text_.substr(pos_, 4) == "true") {
          pos_ += 4;
          spec.loop_after_dispatch = true;
        } else if (text_.substr(pos_, 5) == "false") {
          pos_ += 5;
          spec.loop_after_dispatch = false;
        } else {
          Fail("expected true or false");
        }
        continue;
      }
      Fail("unexpected token in TagDispatch");
    }
    return RuleExpr::TagDispatch(std::move(spec));
  }

  ExprPtr ParseAtom() {
    SkipSpace();
    char c = Peek();
    if (c == '"' || c == '\'') return RuleExpr::Bytes(ParseStringLiteral());
    if (c == '[') return ParseCharClass();
    if (c == '(') {
      ++pos_;
      ExprPtr inner = ParseChoice();
      SkipSpace();
      Expect(")");
      return inner;
    }
    if (IsIdentStart(c)) {
      std::string name = ParseIdentifier();
      if (name == "TagDispatch") {
        SkipSpace();
        if (Peek() == '(') return ParseTagDispatch();
      }
      return RuleExpr::Ref(std::move(name));
    }
    Fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

Grammar ParseEbnf(std::string_view text) {
  Grammar g = EbnfParser(text).Parse();
  ThrowIfInvalid(g);
  return g;
}

}  // namespace gramdash
