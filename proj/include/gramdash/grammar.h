/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/grammar.h
 * \brief Rule-indexed IR of an EBNF grammar, the EBNF front end and repetition compression.
 */
#ifndef GRAMDASH_GRAMMAR_H_
#define GRAMDASH_GRAMMAR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gramdash/error.h"

namespace gramdash {

/*! \brief Inclusive byte range. */
struct ByteRange {
  uint8_t lower;
  uint8_t upper;

  friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

/*!
 * \brief Parameters of a TagDispatch construct.
 *
 * In dispatching mode arbitrary text is accepted while the tags and stop strings are matched
 * incrementally. Emitting tag i hands decoding over to rule `pairs[i].second`; a stop string ends
 * the construct.
 */
struct TagDispatchSpec {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> stop_strs;
  bool loop_after_dispatch = true;

  friend bool operator==(const TagDispatchSpec&, const TagDispatchSpec&) = default;
};

enum class ExprKind {
  kEmpty,
  kBytes,
  kCharClass,
  kSequence,
  kChoice,
  kRuleRef,
  kRepetition,
  kTagDispatch,
};

inline constexpr int64_t kUnbounded = -1;

struct RuleExpr;
using ExprPtr = std::shared_ptr<const RuleExpr>;

/*!
 * \brief One node of a rule body. Nodes are immutable and freely shared between grammars.
 *
 * A repetition with `compressed_threshold > 0` is the counted tail left behind by
 * CompressRepetitions: it is always preceded by `compressed_threshold` explicit copies of its
 * body and is compiled into a dedicated counting rule.
 */
struct RuleExpr {
  ExprKind kind = ExprKind::kEmpty;
  std::string bytes;  // kBytes literal, or the referenced rule name for kRuleRef
  std::vector<ByteRange> ranges;
  bool negated = false;
  std::vector<ExprPtr> children;
  int64_t min = 0;
  int64_t max = kUnbounded;
  int32_t compressed_threshold = 0;
  TagDispatchSpec dispatch;

  static ExprPtr Empty();
  static ExprPtr Bytes(std::string bytes);
  static ExprPtr CharClass(std::vector<ByteRange> ranges, bool negated = false);
  static ExprPtr Sequence(std::vector<ExprPtr> items);
  static ExprPtr Choice(std::vector<ExprPtr> alternatives);
  static ExprPtr Ref(std::string rule_name);
  static ExprPtr Repeat(ExprPtr body, int64_t min, int64_t max);
  static ExprPtr RepeatTail(ExprPtr body, int64_t min, int64_t max, int32_t threshold);
  static ExprPtr TagDispatch(TagDispatchSpec spec);

  const ExprPtr& body() const { return children.front(); }
  bool IsCompressedTail() const {
    return kind == ExprKind::kRepetition && compressed_threshold > 0;
  }
  /*! \brief The effective byte set of a char class, after applying negation. */
  std::vector<ByteRange> EffectiveRanges() const;
};

bool StructurallyEqual(const RuleExpr& lhs, const RuleExpr& rhs);

struct Rule {
  std::string name;
  ExprPtr body;
};

/*! \brief An immutable set of named rules with a distinguished root. */
class Grammar {
 public:
  Grammar() = default;
  /*! \throws Error(kInvalidGrammar) on duplicate names or a missing root. */
  Grammar(std::vector<Rule> rules, std::string root_name);

  const std::vector<Rule>& rules() const { return rules_; }
  const Rule& rule(int32_t index) const { return rules_[index]; }
  int32_t num_rules() const { return static_cast<int32_t>(rules_.size()); }
  const std::string& root_name() const { return rules_[root_].name; }
  int32_t root_index() const { return root_; }
  std::optional<int32_t> FindRule(std::string_view name) const;

  /*! \brief Renders the grammar in the EBNF surface syntax accepted by ParseEbnf. */
  std::string ToString() const;
  /*! \brief FNV-1a digest of ToString(), as 16 hex digits. */
  std::string Digest() const;

 private:
  std::vector<Rule> rules_;
  int32_t root_ = 0;
};

bool StructurallyEqual(const Grammar& lhs, const Grammar& rhs);

std::string PrintExpr(const RuleExpr& expr);
/*! \brief Quotes a byte string as an EBNF literal, escaping non-printable bytes as \xNN. */
std::string QuoteBytes(std::string_view bytes);

/*!
 * \brief Parses GBNF-flavoured EBNF text. The root is the rule named `root`, or the first rule.
 * \throws SyntaxError, Error(kUnknownRule), Error(kNullableRepetitionBody),
 *   Error(kInvalidGrammar) for other validation failures.
 */
Grammar ParseEbnf(std::string_view text);

struct Diagnostic {
  ErrorKind kind;
  std::string rule;
  std::string reason;
};

/*! \brief Empty iff the grammar satisfies every structural invariant. */
std::vector<Diagnostic> Validate(const Grammar& grammar);

/*! \brief Throws the error corresponding to the first diagnostic, if any. */
void ThrowIfInvalid(const Grammar& grammar);

/*! \brief nullable[i] is true iff rule i derives the empty string. */
std::vector<bool> ComputeNullable(const Grammar& grammar);
bool IsNullable(const RuleExpr& expr, const Grammar& grammar, const std::vector<bool>& nullable);

inline constexpr int32_t kDefaultRepetitionThreshold = 8;

/*!
 * \brief Bounds the number of explicit body copies produced by every repetition.
 *
 * `R{l,r}` with `r <= t` is expanded. Otherwise counts below t are expanded and the counts from
 * t upward become t mandatory copies followed by a counted tail `{max(l,t)-t, r-t}`. Unbounded
 * repetitions with `l < t` stay as plain loops. The recognized language is unchanged.
 */
Grammar CompressRepetitions(const Grammar& grammar, int32_t threshold);

/*! \brief Explicit expansion of body{min,max} for a bounded max. */
ExprPtr ExpandRepetition(const ExprPtr& body, int64_t min, int64_t max);

}  // namespace gramdash

#endif  // GRAMDASH_GRAMMAR_H_
