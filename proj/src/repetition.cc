/*!
 *  Copyright (c) 2026 by Contributors
 * \file repetition.cc
 * \brief Repetition state compression.
 */
#include "gramdash/grammar.h"

namespace gramdash {

ExprPtr ExpandRepetition(const ExprPtr& body, int64_t min, int64_t max) {
  std::vector<ExprPtr> items(static_cast<size_t>(min), body);
  if (max > min) {
    ExprPtr optional = RuleExpr::Choice({body, RuleExpr::Empty()});
    for (int64_t i = min + 1; i < max; ++i) {
      optional = RuleExpr::Choice({RuleExpr::Sequence({body, optional}), RuleExpr::Empty()});
    }
    items.push_back(std::move(optional));
  }
  return RuleExpr::Sequence(std::move(items));
}

namespace {

ExprPtr Compress(const ExprPtr& expr, int32_t t) {
  const RuleExpr& e = *expr;
  switch (e.kind) {
    case ExprKind::kSequence:
    case ExprKind::kChoice: {
      std::vector<ExprPtr> children;
      children.reserve(e.children.size());
      for (const auto& c : e.children) children.push_back(Compress(c, t));
      return e.kind == ExprKind::kSequence ? RuleExpr::Sequence(std::move(children))
                                           : RuleExpr::Choice(std::move(children));
    }
    case ExprKind::kRepetition:
      break;
    default:
      return expr;
  }

  ExprPtr body = Compress(e.body(), t);
  if (e.IsCompressedTail()) {
    return RuleExpr::RepeatTail(body, e.min, e.max, e.compressed_threshold);
  }
  const bool bounded = e.max != kUnbounded;
  if (bounded && e.max <= t) return ExpandRepetition(body, e.min, e.max);
  if (!bounded && e.min < t) return RuleExpr::Repeat(body, e.min, e.max);

  std::vector<ExprPtr> mandatory(static_cast<size_t>(t), body);
  if (e.min < t) {
    // Counts min..t-1 are expanded; counts t..max go through t copies and a tail {0, max-t}.
    mandatory.push_back(RuleExpr::RepeatTail(body, 0, e.max - t, t));
    return RuleExpr::Choice(
        {ExpandRepetition(body, e.min, t - 1), RuleExpr::Sequence(std::move(mandatory))}
    );
  }
  int64_t tail_max = bounded ? e.max - t : kUnbounded;
  mandatory.push_back(RuleExpr::RepeatTail(body, e.min - t, tail_max, t));
  return RuleExpr::Sequence(std::move(mandatory));
}

}  // namespace

Grammar CompressRepetitions(const Grammar& grammar, int32_t threshold) {
  if (threshold < 1) {
    throw Error(ErrorKind::kInvalidGrammar, "repetition threshold must be at least 1");
  }
  std::vector<Rule> rules;
  rules.reserve(grammar.rules().size());
  for (const auto& rule : grammar.rules()) {
    rules.push_back({rule.name, Compress(rule.body, threshold)});
  }
  Grammar result(std::move(rules), grammar.root_name());
  for (const auto& d : Validate(result)) {
    if (d.kind == ErrorKind::kNullableRepetitionBody) throw Error(d.kind, d.rule);
  }
  return result;
}

}  // namespace gramdash
