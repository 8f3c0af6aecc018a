/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/dispatch.h
 * \brief TagDispatch: Aho-Corasick tag matching over free text and tag-triggered sub-grammars.
 */
#ifndef GRAMDASH_DISPATCH_H_
#define GRAMDASH_DISPATCH_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gramdash/fsm.h"
#include "gramdash/grammar.h"

namespace gramdash {

/*!
 * \brief Aho-Corasick automaton over byte patterns. Node 0 is the root; nodes are numbered in
 * BFS order with children visited by increasing byte.
 */
class AcAutomaton {
 public:
  /*! \throws Error(kEmptyTag), Error(kDuplicateTag). */
  static AcAutomaton Build(std::span<const std::string> patterns);

  int32_t num_nodes() const { return static_cast<int32_t>(fail_.size()); }
  int32_t num_patterns() const { return static_cast<int32_t>(patterns_.size()); }
  const std::string& pattern(int32_t id) const { return patterns_[id]; }
  int32_t num_goto_edges() const { return num_nodes() - 1; }

  /*! \brief Trie child, or -1. */
  int32_t Goto(int32_t node, uint8_t byte) const;
  const std::vector<std::pair<uint8_t, int32_t>>& Children(int32_t node) const {
    return children_[node];
  }
  int32_t Fail(int32_t node) const { return fail_[node]; }
  int32_t Depth(int32_t node) const { return depth_[node]; }
  /*! \brief Patterns that are suffixes of the node's path, longest first. */
  const std::vector<int32_t>& Outputs(int32_t node) const { return outputs_[node]; }
  /*! \brief Goto with failure-link fallback. */
  int32_t Next(int32_t node, uint8_t byte) const { return delta_[node][byte]; }

  /*! \brief Consumes one byte: the new node and every pattern ending at it, longest first. */
  std::pair<int32_t, std::vector<int32_t>> Feed(int32_t node, uint8_t byte) const {
    int32_t next = Next(node, byte);
    return {next, Outputs(next)};
  }

 private:
  std::vector<std::string> patterns_;
  std::vector<std::vector<std::pair<uint8_t, int32_t>>> children_;
  std::vector<int32_t> fail_;
  std::vector<int32_t> depth_;
  std::vector<std::vector<int32_t>> outputs_;
  std::vector<std::array<int32_t, 256>> delta_;
};

struct AcEbnfStats {
  int32_t states = 0;
  int32_t transitions = 0;
  /*! \brief Number of expression nodes plus one per rule. */
  int64_t ebnf_size = 0;
  /*! \brief Length of the printed grammar text. */
  int64_t ebnf_bytes = 0;
};

/*!
 * \brief Plain-EBNF encoding of tag matching: one rule per automaton node, one rule reference
 * per goto edge and per failure link. Text is consumed until a node carrying an output is
 * reached, where the rule ends.
 */
std::pair<Grammar, AcEbnfStats> AcToEbnf(const AcAutomaton& ac);

/*! \brief Patterns of a TagDispatch: its tags in order, followed by its stop strings. */
std::vector<std::string> DispatchPatterns(const TagDispatchSpec& spec);

/*!
 * \brief Compiles a TagDispatch into a rule FSM.
 *
 * States 0..n-1 mirror the automaton nodes (dispatching mode). Reaching a node whose longest
 * output is tag i moves to a state with a single reference edge to the tag's rule; after it the
 * FSM returns to the root node, or to the done state when looping is disabled. A stop string
 * moves to the done state. The done state is final, and so is every dispatching state when
 * there are no stop strings. `ac_node_of_state`, when given, receives the automaton node of
 * each FSM state (-1 for the others).
 */
Fsm CompileTagDispatch(const TagDispatchSpec& spec,
                       const std::function<int32_t(std::string_view)>& resolve,
                       std::vector<int32_t>* ac_node_of_state = nullptr);

/****************** Streaming dispatcher ******************/

/*! \brief Incremental recognizer for a dispatched sub-grammar. */
class SubParser {
 public:
  virtual ~SubParser() = default;
  virtual bool Advance(uint8_t byte) = 0;
  virtual bool CanTerminate() const = 0;
  /*! \brief True while some byte could still be accepted. */
  virtual bool HasContinuation() const = 0;
};

using SubParserFactory = std::function<std::unique_ptr<SubParser>(const std::string& rule)>;

struct DispatchProgram {
  TagDispatchSpec spec;
  AcAutomaton ac;

  static DispatchProgram Build(TagDispatchSpec spec);
  int32_t num_tags() const { return static_cast<int32_t>(spec.pairs.size()); }
};

struct DispatchMode {
  enum class Kind { kDispatching, kDispatched, kTerminated };

  Kind kind = Kind::kDispatching;
  int32_t ac_state = 0;
  int32_t tag = -1;
  std::unique_ptr<SubParser> sub;

  static DispatchMode Dispatching(int32_t ac_state = 0) {
    return {Kind::kDispatching, ac_state, -1, nullptr};
  }
  static DispatchMode Terminated() { return {Kind::kTerminated, 0, -1, nullptr}; }
};

struct DispatchStepResult {
  DispatchMode mode;
  bool accepted = false;
};

/*!
 * \brief Consumes one byte.
 *
 * Dispatching accepts every byte; a tag match enters the tag's sub-grammar (tag bytes already
 * consumed), a stop string terminates. Dispatched mode delegates to the sub-parser and returns
 * to the root node once the sub-grammar has completed and cannot continue; a byte the finished
 * sub-grammar cannot take is re-fed in dispatching mode. Matching across a dispatch boundary is
 * not recognized.
 * \throws Error(kSubGrammarReject) when the byte is invalid inside an unfinished sub-grammar.
 */
DispatchStepResult DispatchStep(DispatchMode mode, const DispatchProgram& program, uint8_t byte,
                                const SubParserFactory& factory);

}  // namespace gramdash

#endif  // GRAMDASH_DISPATCH_H_
