/*!
 *  Copyright (c) 2026 by Contributors
 * \file grammar.cc
 */
#include "gramdash/grammar.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

namespace gramdash {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSyntaxError:
      return "SyntaxError";
    case ErrorKind::kUnknownRule:
      return "UnknownRule";
    case ErrorKind::kNullableRepetitionBody:
      return "NullableRepetitionBody";
    case ErrorKind::kInvalidGrammar:
      return "InvalidGrammar";
    case ErrorKind::kDuplicateTag:
      return "DuplicateTag";
    case ErrorKind::kEmptyTag:
      return "EmptyTag";
    case ErrorKind::kSubGrammarReject:
      return "SubGrammarReject";
    case ErrorKind::kInvalidMarker:
      return "InvalidMarker";
    case ErrorKind::kNotScannable:
      return "NotScannable";
    case ErrorKind::kDuplicateId:
      return "DuplicateId";
    case ErrorKind::kMissingEos:
      return "MissingEos";
    case ErrorKind::kMalformedLine:
      return "MalformedLine";
    case ErrorKind::kIndexOutOfRange:
      return "IndexOutOfRange";
    case ErrorKind::kUnsupportedKeyword:
      return "UnsupportedKeyword";
    case ErrorKind::kDuplicateToolName:
      return "DuplicateToolName";
    case ErrorKind::kNoTools:
      return "NoTools";
    case ErrorKind::kInvalidPrefix:
      return "InvalidPrefix";
    case ErrorKind::kUnhashedReference:
      return "UnhashedReference";
    case ErrorKind::kIo:
      return "IoError";
  }
  return "Error";
}

/****************** RuleExpr ******************/

ExprPtr RuleExpr::Empty() {
  static const ExprPtr kEmptyExpr = std::make_shared<const RuleExpr>();
  return kEmptyExpr;
}

ExprPtr RuleExpr::Bytes(std::string bytes) {
  if (bytes.empty()) return Empty();
  RuleExpr e;
  e.kind = ExprKind::kBytes;
  e.bytes = std::move(bytes);
  return std::make_shared<const RuleExpr>(std::move(e));
}

ExprPtr RuleExpr::CharClass(std::vector<ByteRange> ranges, bool negated) {
  RuleExpr e;
  e.kind = ExprKind::kCharClass;
  e.ranges = std::move(ranges);
  e.negated = negated;
  return std::make_shared<const RuleExpr>(std::move(e));
}

ExprPtr RuleExpr::Sequence(std::vector<ExprPtr> items) {
  if (items.empty()) return Empty();
  if (items.size() == 1) return items.front();
  RuleExpr e;
  e.kind = ExprKind::kSequence;
  e.children = std::move(items);
  return std::make_shared<const RuleExpr>(std::move(e));
}

ExprPtr RuleExpr::Choice(std::vector<ExprPtr> alternatives) {
  if (alternatives.size() == 1) return alternatives.front();
  RuleExpr e;
  e.kind = ExprKind::kChoice;
  e.children = std::move(alternatives);
  return std::make_shared<const RuleExpr>(std::move(e));
}

ExprPtr RuleExpr::Ref(std::string rule_name) {
  RuleExpr e;
  e.kind = ExprKind::kRuleRef;
  e.bytes = std::move(rule_name);
  return std::make_shared<const RuleExpr>(std::move(e));
}

ExprPtr RuleExpr::Repeat(ExprPtr body, int64_t min, int64_t max) {
  RuleExpr e;
  e.kind = ExprKind::kRepetition;
  e.children = {std::move(body)};
  e.min = min;
  e.max = max;
  return std::make_shared<const RuleExpr>(std::move(e));
}

ExprPtr RuleExpr::RepeatTail(ExprPtr body, int64_t min, int64_t max, int32_t threshold) {
  RuleExpr e;
  e.kind = ExprKind::kRepetition;
  e.children = {std::move(body)};
  e.min = min;
  e.max = max;
  e.compressed_threshold = threshold;
  return std::make_shared<const RuleExpr>(std::move(e));
}

ExprPtr RuleExpr::TagDispatch(TagDispatchSpec spec) {
  RuleExpr e;
  e.kind = ExprKind::kTagDispatch;
  e.dispatch = std::move(spec);
  return std::make_shared<const RuleExpr>(std::move(e));
}

std::vector<ByteRange> RuleExpr::EffectiveRanges() const {
  std::vector<bool> in(256, false);
  for (const auto& r : ranges) {
    for (int b = r.lower; b <= r.upper; ++b) in[b] = true;
  }
  if (negated) in.flip();
  std::vector<ByteRange> result;
  for (int b = 0; b < 256;) {
    if (!in[b]) {
      ++b;
      continue;
    }
    int e = b;
    while (e + 1 < 256 && in[e + 1]) ++e;
    result.push_back({static_cast<uint8_t>(b), static_cast<uint8_t>(e)});
    b = e + 1;
  }
  return result;
}

bool StructurallyEqual(const RuleExpr& lhs, const RuleExpr& rhs) {
  if (&lhs == &rhs) return true;
  if (lhs.kind != rhs.kind || lhs.bytes != rhs.bytes || lhs.negated != rhs.negated ||
      lhs.ranges != rhs.ranges || lhs.min != rhs.min || lhs.max != rhs.max ||
      lhs.compressed_threshold != rhs.compressed_threshold || lhs.dispatch != rhs.dispatch ||
      lhs.children.size() != rhs.children.size()) {
    return false;
  }
  for (size_t i = 0; i < lhs.children.size(); ++i) {
    if (!StructurallyEqual(*lhs.children[i], *rhs.children[i])) return false;
  }
  return true;
}

/****************** Grammar ******************/

Grammar::Grammar(std::vector<Rule> rules, std::string root_name) : rules_(std::move(rules)) {
  std::set<std::string_view> seen;
  for (const auto& rule : rules_) {
    if (!seen.insert(rule.name).second) {
      throw Error(ErrorKind::kInvalidGrammar, "duplicate rule name '" + rule.name + "'");
    }
  }
  auto root = FindRule(root_name);
  if (!root) throw Error(ErrorKind::kInvalidGrammar, "missing root rule '" + root_name + "'");
  root_ = *root;
}

std::optional<int32_t> Grammar::FindRule(std::string_view name) const {
  for (int32_t i = 0; i < num_rules(); ++i) {
    if (rules_[i].name == name) return i;
  }
  return std::nullopt;
}

bool StructurallyEqual(const Grammar& lhs, const Grammar& rhs) {
  if (lhs.num_rules() != rhs.num_rules() || lhs.root_index() != rhs.root_index()) return false;
  for (int32_t i = 0; i < lhs.num_rules(); ++i) {
    if (lhs.rule(i).name != rhs.rule(i).name) return false;
    if (!StructurallyEqual(*lhs.rule(i).body, *rhs.rule(i).body)) return false;
  }
  return true;
}

namespace {

void AppendEscapedByte(std::string* out, uint8_t b, std::string_view specials) {
  if (b == '\n') {
    *out += "\\n";
  } else if (b == '\t') {
    *out += "\\t";
  } else if (b == '\r') {
    *out += "\\r";
  } else if (b < 0x20 || b >= 0x7f) {
    char buf[5];
    std::snprintf(buf, sizeof(buf), "\\x%02x", b);
    *out += buf;
  } else if (specials.find(static_cast<char>(b)) != std::string_view::npos) {
    *out += '\\';
    *out += static_cast<char>(b);
  } else {
    *out += static_cast<char>(b);
  }
}

// 0: choice, 1: sequence, 2: postfix operand
int Precedence(const RuleExpr& e) {
  switch (e.kind) {
    case ExprKind::kChoice:
      return 0;
    case ExprKind::kSequence:
      return 1;
    default:
      return 2;
  }
}

void PrintTo(const RuleExpr& e, std::string* out);

void PrintChild(const RuleExpr& e, int min_precedence, std::string* out) {
  if (Precedence(e) < min_precedence) {
    *out += '(';
    PrintTo(e, out);
    *out += ')';
  } else {
    PrintTo(e, out);
  }
}

void PrintTo(const RuleExpr& e, std::string* out) {
  switch (e.kind) {
    case ExprKind::kEmpty:
      *out += "\"\"";
      break;
    case ExprKind::kBytes:
      *out += QuoteBytes(e.bytes);
      break;
    case ExprKind::kCharClass: {
      *out += e.negated ? "[^" : "[";
      for (const auto& r : e.ranges) {
        AppendEscapedByte(out, r.lower, "]\\^-[");
        if (r.upper != r.lower) {
          *out += '-';
          AppendEscapedByte(out, r.upper, "]\\^-[");
        }
      }
      *out += ']';
      break;
    }
    case ExprKind::kSequence:
      for (size_t i = 0; i < e.children.size(); ++i) {
        if (i) *out += ' ';
        PrintChild(*e.children[i], 2, out);
      }
      break;
    case ExprKind::kChoice:
      for (size_t i = 0; i < e.children.size(); ++i) {
        if (i) *out += " | ";
        PrintChild(*e.children[i], 1, out);
      }
      break;
    case ExprKind::kRuleRef:
      *out += e.bytes;
      break;
    case ExprKind::kRepetition: {
      const RuleExpr& body = *e.body();
      if (body.kind == ExprKind::kRepetition || Precedence(body) < 2) {
        *out += '(';
        PrintTo(body, out);
        *out += ')';
      } else {
        PrintTo(body, out);
      }
      *out += '{' + std::to_string(e.min) + ',';
      if (e.max != kUnbounded) *out += std::to_string(e.max);
      *out += '}';
      break;
    }
    case ExprKind::kTagDispatch: {
      *out += "TagDispatch(";
      const auto& spec = e.dispatch;
      for (size_t i = 0; i < spec.pairs.size(); ++i) {
        if (i) *out += ", ";
        *out += '(' + QuoteBytes(spec.pairs[i].first) + ", " + spec.pairs[i].second + ')';
      }
      if (!spec.stop_strs.empty() || !spec.loop_after_dispatch) {
        *out += " ;";
        for (size_t i = 0; i < spec.stop_strs.size(); ++i) {
          *out += (i ? ", stop=" : " stop=") + QuoteBytes(spec.stop_strs[i]);
        }
      }
      if (!spec.loop_after_dispatch) *out += " ; loop=false";
      *out += ')';
      break;
    }
  }
}

}  // namespace

std::string QuoteBytes(std::string_view bytes) {
  std::string out = "\"";
  for (char c : bytes) AppendEscapedByte(&out, static_cast<uint8_t>(c), "\"\\");
  out += '"';
  return out;
}

std::string PrintExpr(const RuleExpr& expr) {
  std::string out;
  PrintTo(expr, &out);
  return out;
}

std::string Grammar::ToString() const {
  std::string out;
  for (int32_t i = 0; i < num_rules(); ++i) {
    out += rules_[i].name + " ::= " + PrintExpr(*rules_[i].body) + "\n";
  }
  return out;
}

std::string Grammar::Digest() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  std::string text = "root=" + root_name() + "\n" + ToString();
  for (char c : text) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/****************** Validation ******************/

namespace {

template <typename F>
void VisitExpr(const RuleExpr& e, F&& f) {
  f(e);
  for (const auto& c : e.children) VisitExpr(*c, f);
}

bool ExprProductive(const RuleExpr& e, const Grammar& g, const std::vector<bool>& productive) {
  switch (e.kind) {
    case ExprKind::kEmpty:
    case ExprKind::kBytes:
    case ExprKind::kTagDispatch:
      return true;
    case ExprKind::kCharClass:
      return !e.EffectiveRanges().empty();
    case ExprKind::kSequence:
      return std::all_of(e.children.begin(), e.children.end(), [&](const ExprPtr& c) {
        return ExprProductive(*c, g, productive);
      });
    case ExprKind::kChoice:
      return std::any_of(e.children.begin(), e.children.end(), [&](const ExprPtr& c) {
        return ExprProductive(*c, g, productive);
      });
    case ExprKind::kRuleRef: {
      auto idx = g.FindRule(e.bytes);
      return idx && productive[*idx];
    }
    case ExprKind::kRepetition:
      return e.min == 0 || ExprProductive(*e.body(), g, productive);
  }
  return false;
}

}  // namespace

bool IsNullable(const RuleExpr& e, const Grammar& g, const std::vector<bool>& nullable) {
  switch (e.kind) {
    case ExprKind::kEmpty:
      return true;
    case ExprKind::kBytes:
      return e.bytes.empty();
    case ExprKind::kCharClass:
      return false;
    case ExprKind::kSequence:
      return std::all_of(e.children.begin(), e.children.end(), [&](const ExprPtr& c) {
        return IsNullable(*c, g, nullable);
      });
    case ExprKind::kChoice:
      return std::any_of(e.children.begin(), e.children.end(), [&](const ExprPtr& c) {
        return IsNullable(*c, g, nullable);
      });
    case ExprKind::kRuleRef: {
      auto idx = g.FindRule(e.bytes);
      return idx && nullable[*idx];
    }
    case ExprKind::kRepetition:
      return e.min == 0 || IsNullable(*e.body(), g, nullable);
    case ExprKind::kTagDispatch:
      return e.dispatch.stop_strs.empty();
  }
  return false;
}

std::vector<bool> ComputeNullable(const Grammar& g) {
  std::vector<bool> nullable(g.num_rules(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (int32_t i = 0; i < g.num_rules(); ++i) {
      if (!nullable[i] && IsNullable(*g.rule(i).body, g, nullable)) {
        nullable[i] = true;
        changed = true;
      }
    }
  }
  return nullable;
}

std::vector<Diagnostic> Validate(const Grammar& g) {
  std::vector<Diagnostic> diags;
  auto nullable = ComputeNullable(g);
  std::unordered_map<std::string, int> unused;
  for (const auto& rule : g.rules()) {
    const std::string& name = rule.name;
    auto report = [&](ErrorKind kind, std::string reason) {
      diags.push_back({kind, name, std::move(reason)});
    };
    bool is_top = true;
    VisitExpr(*rule.body, [&](const RuleExpr& e) {
      bool top = is_top;
      is_top = false;
      switch (e.kind) {
        case ExprKind::kRuleRef:
          if (!g.FindRule(e.bytes)) report(ErrorKind::kUnknownRule, e.bytes);
          break;
        case ExprKind::kCharClass:
          if (e.EffectiveRanges().empty()) report(ErrorKind::kInvalidGrammar, "empty char class");
          for (const auto& r : e.ranges) {
            if (r.lower > r.upper) report(ErrorKind::kInvalidGrammar, "inverted byte range");
          }
          break;
        case ExprKind::kRepetition:
          if (e.min < 0) report(ErrorKind::kInvalidGrammar, "negative repetition bound");
          if (e.max != kUnbounded && e.max < e.min) {
            report(ErrorKind::kInvalidGrammar, "repetition min exceeds max");
          }
          if (IsNullable(*e.body(), g, nullable)) {
            report(ErrorKind::kNullableRepetitionBody, "repetition body may match empty input");
          }
          break;
        case ExprKind::kTagDispatch: {
          if (!top) {
            report(ErrorKind::kInvalidGrammar, "TagDispatch must be the whole rule body");
          }
          std::set<std::string> patterns;
          for (const auto& [tag, target] : e.dispatch.pairs) {
            if (tag.empty()) report(ErrorKind::kEmptyTag, "empty tag");
            if (!patterns.insert(tag).second) report(ErrorKind::kDuplicateTag, tag);
            if (!g.FindRule(target)) report(ErrorKind::kUnknownRule, target);
          }
          for (const auto& stop : e.dispatch.stop_strs) {
            if (stop.empty()) report(ErrorKind::kEmptyTag, "empty stop string");
            if (!patterns.insert(stop).second) report(ErrorKind::kDuplicateTag, stop);
          }
          break;
        }
        default:
          break;
      }
    });
  }
  if (!diags.empty()) return diags;

  std::vector<bool> productive(g.num_rules(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (int32_t i = 0; i < g.num_rules(); ++i) {
      if (!productive[i] && ExprProductive(*g.rule(i).body, g, productive)) {
        productive[i] = true;
        changed = true;
      }
    }
  }
  for (int32_t i = 0; i < g.num_rules(); ++i) {
    if (!productive[i]) {
      diags.push_back({ErrorKind::kInvalidGrammar, g.rule(i).name, "unproductive rule"});
    }
  }
  return diags;
}

void ThrowIfInvalid(const Grammar& grammar) {
  auto diags = Validate(grammar);
  if (diags.empty()) return;
  const auto& d = diags.front();
  if (d.kind == ErrorKind::kUnknownRule) throw Error(d.kind, d.reason);
  throw Error(d.kind, "rule '" + d.rule + "': " + d.reason);
}

}  // namespace gramdash
