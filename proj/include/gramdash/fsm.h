/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/fsm.h
 * \brief Per-rule finite state machines and their structural hashes.
 *
 * A rule body compiles into an FSM whose edges are byte ranges, references to other rules, or
 * epsilon moves. Structural hashes identify equal sub-structures across grammars: leaves are
 * hashed first, then rules in topological order of the reference graph, then simple reference
 * cycles. Equal hashes imply equal structure (up to 64-bit collisions); the converse is not
 * guaranteed for non-deterministic FSMs.
 */
#ifndef GRAMDASH_FSM_H_
#define GRAMDASH_FSM_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gramdash/grammar.h"

namespace gramdash {

struct FsmEdge {
  enum class Kind : uint8_t { kTerminal, kRuleRef, kEpsilon };

  Kind kind = Kind::kEpsilon;
  uint8_t lower = 0;
  uint8_t upper = 0;
  int32_t rule = -1;
  int32_t target = 0;

  static FsmEdge Terminal(uint8_t lower, uint8_t upper, int32_t target) {
    return {Kind::kTerminal, lower, upper, -1, target};
  }
  static FsmEdge RuleRef(int32_t rule, int32_t target) {
    return {Kind::kRuleRef, 0, 0, rule, target};
  }
  static FsmEdge Epsilon(int32_t target) { return {Kind::kEpsilon, 0, 0, -1, target}; }

  bool IsTerminal() const { return kind == Kind::kTerminal; }
  bool IsRuleRef() const { return kind == Kind::kRuleRef; }
  bool IsEpsilon() const { return kind == Kind::kEpsilon; }

  friend bool operator==(const FsmEdge&, const FsmEdge&) = default;
};

class Fsm {
 public:
  Fsm() = default;

  int32_t AddState() {
    edges_.emplace_back();
    finals_.push_back(false);
    return num_states() - 1;
  }
  void AddEdge(int32_t from, FsmEdge edge) { edges_[from].push_back(edge); }
  void SetFinal(int32_t state, bool final = true) { finals_[state] = final; }
  void set_initial(int32_t state) { initial_ = state; }

  int32_t num_states() const { return static_cast<int32_t>(edges_.size()); }
  int32_t initial() const { return initial_; }
  bool IsFinal(int32_t state) const { return finals_[state]; }
  const std::vector<FsmEdge>& edges(int32_t state) const { return edges_[state]; }
  std::vector<FsmEdge>& mutable_edges(int32_t state) { return edges_[state]; }
  int32_t num_edges() const;

  bool HasEpsilon() const;
  bool HasRuleRefs() const;
  /*! \brief No epsilon edges and no two terminal edges of a state overlap. */
  bool IsDeterministic() const;

  /*!
   * \brief Membership test over a symbol sequence; symbols 0..255 are bytes and `256 + r`
   * denotes a reference to rule r.
   */
  bool AcceptsSymbols(std::span<const int32_t> symbols) const;

  std::optional<uint64_t> hash;

  friend bool operator==(const Fsm& lhs, const Fsm& rhs) {
    return lhs.initial_ == rhs.initial_ && lhs.edges_ == rhs.edges_ &&
           lhs.finals_ == rhs.finals_;
  }

 private:
  int32_t initial_ = 0;
  std::vector<std::vector<FsmEdge>> edges_;
  std::vector<bool> finals_;
};

/*!
 * \brief Thompson-style construction. Rule references are resolved through `resolve`, which
 * returns the referenced rule index. Compressed repetition tails and TagDispatch must be lifted
 * into their own rules beforehand.
 */
Fsm BuildFsm(const RuleExpr& body, const std::function<int32_t(std::string_view)>& resolve);

inline constexpr int32_t kDefaultDeterminizeCap = 4096;

struct DeterminizeResult {
  Fsm fsm;
  /*! \brief Set when the state cap was exceeded; `fsm` is then the unchanged input. */
  bool blowup = false;
};

/*!
 * \brief Subset construction. Each distinct rule reference is treated as its own symbol, so
 * the output is deterministic over bytes and references alike.
 */
DeterminizeResult Determinize(const Fsm& fsm, int32_t state_cap = kDefaultDeterminizeCap);

/****************** Hashing ******************/

/*! \brief Marks non-terminal slots in the hash transcript. Odd and above the byte range. */
inline constexpr uint64_t kNonTerminalSentinel = 0x9d2c5680a5b9c3e7ULL;
/*! \brief Stand-in hash for references into a simple cycle that is still being hashed. */
inline constexpr uint64_t kCycleSentinel = 0xc2b2ae3d27d4eb4fULL;

/*! \brief Non-commutative 64-bit mix: rotate, xor, multiply. */
inline uint64_t HashCombine(uint64_t h, uint64_t value) {
  h = (h << 23) | (h >> 41);
  h ^= value + 0x9e3779b97f4a7c15ULL;
  return h * 0x100000001b3ULL;
}

template <typename... Values>
uint64_t HashCombine(uint64_t h, uint64_t first, Values... rest) {
  h = HashCombine(h, first);
  if constexpr (sizeof...(rest) > 0) return HashCombine(h, rest...);
  return h;
}

/*! \brief Per-rule hash environment; nullopt marks rules not hashed yet. */
using HashEnv = std::span<const std::optional<uint64_t>>;

/*!
 * \brief Breadth-first structural hash of one FSM.
 * \throws Error(kUnhashedReference) when a referenced rule has no hash in `env`.
 */
uint64_t HashFsm(const Fsm& fsm, HashEnv env);

/*!
 * \brief BFS numbering used by HashFsm: order[i] is the original id of canonical state i.
 * Unreachable states do not appear.
 */
std::vector<int32_t> CanonicalOrder(const Fsm& fsm, HashEnv env);

/*! \brief Renumbers states by CanonicalOrder and drops unreachable states. */
Fsm Canonicalize(const Fsm& fsm, HashEnv env);

/*! \brief output[i] folds the hashes of the cycle rotated to start at i. */
std::vector<uint64_t> HashCycle(std::span<const uint64_t> local);

/*!
 * \brief Hashes every rule FSM of a grammar.
 *
 * `salts[i]`, when non-zero, is mixed into rule i's local hash so that rules with equal FSMs
 * but different runtime semantics never share a hash. Rules inside strongly connected
 * components that are not simple cycles receive fresh, process-unique hashes.
 */
std::vector<uint64_t> HashRules(std::span<const Fsm> fsms, std::span<const uint64_t> salts);

/*! \brief A hash that no other call returns within this process. */
uint64_t FreshUniqueHash();

/*!
 * \brief Explicit structural isomorphism check: walks both FSMs from their initial states,
 * pairing edges by label (references compared through `env`). Exact for FSMs in which no
 * state has two edges with the same label.
 */
bool IsIsomorphic(const Fsm& lhs, const Fsm& rhs, HashEnv env);

}  // namespace gramdash

#endif  // GRAMDASH_FSM_H_
