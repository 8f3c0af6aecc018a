/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/compiled_grammar.h
 * \brief A grammar lowered to per-rule canonical FSMs with structural hashes and lookaheads.
 */
#ifndef GRAMDASH_COMPILED_GRAMMAR_H_
#define GRAMDASH_COMPILED_GRAMMAR_H_

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gramdash/fsm.h"
#include "gramdash/grammar.h"

namespace gramdash {

/*! \brief A set of bytes. */
struct ByteSet {
  std::array<uint64_t, 4> words{};

  void Set(int byte) { words[byte >> 6] |= uint64_t{1} << (byte & 63); }
  void SetRange(int lower, int upper) {
    for (int b = lower; b <= upper; ++b) Set(b);
  }
  bool Test(int byte) const { return (words[byte >> 6] >> (byte & 63)) & 1; }
  bool Any() const { return words[0] | words[1] | words[2] | words[3]; }
  /*! \brief Returns true if this set grew. */
  bool Merge(const ByteSet& other) {
    bool grew = false;
    for (int i = 0; i < 4; ++i) {
      uint64_t merged = words[i] | other.words[i];
      grew = grew || merged != words[i];
      words[i] = merged;
    }
    return grew;
  }

  friend bool operator==(const ByteSet&, const ByteSet&) = default;
  friend auto operator<=>(const ByteSet&, const ByteSet&) = default;
};

/*!
 * \brief Bounded description of the bytes that may follow the completion of a rule.
 *
 * A non-empty suffix s is admitted iff some pair (first, second) has s[0] in first and, when s
 * has a second byte, s[1] in second. The description over-approximates: it never rejects a
 * suffix that some derivation could produce.
 */
struct Lookahead {
  bool unconstrained = false;
  std::vector<std::pair<ByteSet, ByteSet>> pairs;
  uint64_t hash = 0;

  bool Admits(std::string_view suffix) const;
  void ComputeHash();

  friend bool operator==(const Lookahead& lhs, const Lookahead& rhs) {
    return lhs.unconstrained == rhs.unconstrained && lhs.pairs == rhs.pairs;
  }
};

enum class RuleKind : uint8_t {
  kNormal,
  /*! \brief Counted repetition of its FSM, which describes one body match. */
  kRepeat,
  kDispatch,
  /*! \brief The synthetic start rule `$start ::= root`. */
  kStart,
};

const char* RuleKindName(RuleKind kind);

/*! \brief Per-state adjacency split by edge kind, for the parser's inner loops. */
struct StateInfo {
  bool final = false;
  std::vector<FsmEdge> terminals;
  std::vector<FsmEdge> refs;
  std::vector<int32_t> epsilons;
};

struct CompiledRule {
  std::string name;
  RuleKind kind = RuleKind::kNormal;
  /*! \brief Canonically numbered FSM. */
  Fsm fsm;
  uint64_t hash = 0;
  bool nullable = false;
  bool determinize_blowup = false;
  int64_t rep_min = 0;
  int64_t rep_max = kUnbounded;
  /*! \brief Number of body matches the mask cache treats as always available in the far phase. */
  int32_t rep_window = 0;
  Lookahead lookahead;
  std::vector<StateInfo> states;
};

struct CompileOptions {
  int32_t repetition_threshold = kDefaultRepetitionThreshold;
  bool compress_repetitions = true;
  int32_t determinize_cap = kDefaultDeterminizeCap;
};

class CompiledGrammar {
 public:
  /*! \throws Error(kInvalidGrammar) and the errors of ThrowIfInvalid. */
  static std::shared_ptr<const CompiledGrammar> Compile(const Grammar& grammar,
                                                        const CompileOptions& options = {});

  const Grammar& source() const { return source_; }
  const Grammar& lowered() const { return lowered_; }
  const CompileOptions& options() const { return options_; }

  int32_t num_rules() const { return static_cast<int32_t>(rules_.size()); }
  const CompiledRule& rule(int32_t index) const { return rules_[index]; }
  const std::vector<CompiledRule>& rules() const { return rules_; }
  int32_t start_rule() const { return num_rules() - 1; }
  int32_t root_rule() const { return root_; }
  uint64_t root_hash() const { return rules_[root_].hash; }
  const StateInfo& state(int32_t rule, int32_t s) const { return rules_[rule].states[s]; }

  int64_t total_states() const;
  int64_t total_edges() const;

 private:
  Grammar source_;
  Grammar lowered_;
  CompileOptions options_;
  std::vector<CompiledRule> rules_;
  int32_t root_ = 0;
};

/*!
 * \brief Lookahead of every rule, computed from the reference sites of each rule in `rules`
 * (whose FSMs, kinds and nullability must be set).
 */
std::vector<Lookahead> ComputeLookaheads(const std::vector<CompiledRule>& rules);

}  // namespace gramdash

#endif  // GRAMDASH_COMPILED_GRAMMAR_H_
