/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/earley.h
 * \brief Incremental byte-level Earley parser over a compiled grammar.
 */
#ifndef GRAMDASH_EARLEY_H_
#define GRAMDASH_EARLEY_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "gramdash/compiled_grammar.h"

namespace gramdash {

/*!
 * \brief A dotted rule. The dot is a state of the rule's canonical FSM; `count` is the number of
 * completed body matches for repetition rules and 0 otherwise.
 */
struct EarleyItem {
  int32_t rule = 0;
  int32_t state = 0;
  int32_t origin = 0;
  int32_t count = 0;

  friend bool operator==(const EarleyItem&, const EarleyItem&) = default;
};

struct EarleyItemHash {
  size_t operator()(const EarleyItem& item) const {
    uint64_t h = (static_cast<uint64_t>(static_cast<uint32_t>(item.rule)) << 32) ^
                 static_cast<uint32_t>(item.state);
    h = h * 0x9e3779b97f4a7c15ULL ^ (static_cast<uint64_t>(static_cast<uint32_t>(item.origin)) << 20) ^
        static_cast<uint32_t>(item.count);
    return static_cast<size_t>(h * 0xff51afd7ed558ccdULL >> 7);
  }
};

class EarleyParser {
 public:
  /*! \brief Origin of the items descending from the root of a local parse. */
  static constexpr int32_t kRootOrigin = -1;

  /*!
   * \brief Root of a local parse: the parse starts inside `rule` at `state` and the rule's
   * completion ends the parse. For repetition rules, `crossing_cap` bounds how many times the
   * root may start a new body match (-1: unbounded); the root's count then records the number
   * of such crossings instead of the true repetition count.
   */
  struct LocalRoot {
    int32_t rule = 0;
    int32_t state = 0;
    int32_t crossing_cap = -1;
  };

  /*! \brief Parser for the whole grammar, starting from `$start ::= root`. */
  explicit EarleyParser(std::shared_ptr<const CompiledGrammar> grammar);
  EarleyParser(std::shared_ptr<const CompiledGrammar> grammar, const LocalRoot& root);

  const CompiledGrammar& grammar() const { return *grammar_; }

  /*! \brief On rejection the parser is left unchanged. */
  bool Advance(uint8_t byte);
  /*! \brief Advances over every byte, or restores the current position and returns false. */
  bool AdvanceBytes(std::string_view bytes);

  int32_t position() const { return static_cast<int32_t>(chart_begin_.size()) - 1; }
  int32_t Checkpoint() const { return position(); }
  /*! \throws Error(kInvalidMarker) when the marker lies beyond the current position. */
  void Rollback(int32_t marker);

  /*! \brief The start rule is complete over the whole input. */
  bool CanTerminate() const;
  /*! \brief Local parses: the root rule completes at the current position. */
  bool RootCompleted() const { return root_completed_.back(); }

  std::span<const EarleyItem> Items(int32_t pos) const;
  std::span<const EarleyItem> CurrentItems() const { return Items(position()); }
  /*! \brief Items of the current chart whose dot state has a terminal edge. */
  std::vector<EarleyItem> ScannableItems() const;
  /*! \brief Textual dump of every chart, for tests. */
  std::string SerializeCharts() const;

 private:
  struct Waiter {
    int32_t awaited;
    EarleyItem advanced;
  };

  void Reset(const EarleyItem& seed);
  void Add(const EarleyItem& item);
  void Closure(size_t from);
  void Complete(int32_t rule, int32_t origin);

  std::shared_ptr<const CompiledGrammar> grammar_;
  bool local_ = false;
  int32_t root_rule_ = 0;
  int32_t crossing_cap_ = -1;

  std::vector<EarleyItem> items_;
  std::vector<size_t> chart_begin_;
  std::vector<Waiter> waiters_;
  std::vector<size_t> waiter_begin_;
  std::vector<bool> root_completed_;
  std::unordered_set<EarleyItem, EarleyItemHash> seen_;
};

}  // namespace gramdash

#endif  // GRAMDASH_EARLEY_H_
