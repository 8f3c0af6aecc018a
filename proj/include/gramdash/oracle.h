/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/oracle.h
 * \brief Cache-free reference masks and engine-versus-reference trace comparison.
 *
 * The reference recognizer is a textbook Earley recognizer over a plain BNF obtained by
 * desugaring the grammar IR directly: no FSMs, hashes, lookaheads or caches are involved, and
 * repetitions are expanded exactly as written (no compression).
 */
#ifndef GRAMDASH_ORACLE_H_
#define GRAMDASH_ORACLE_H_

#include <bitset>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gramdash/compiled_grammar.h"
#include "gramdash/grammar.h"
#include "gramdash/mask_cache.h"
#include "gramdash/vocab.h"

namespace gramdash {

class GrammarMatcher;

/*! \brief Plain BNF: symbols >= 0 are nonterminals, symbol -(k+1) is terminal set k. */
struct Bnf {
  struct Production {
    int32_t lhs;
    std::vector<int32_t> rhs;
  };
  std::vector<Production> productions;
  std::vector<std::vector<int32_t>> by_lhs;
  std::vector<std::bitset<256>> terminals;
  std::vector<bool> nullable;
  int32_t num_nonterminals = 0;
  int32_t start = 0;

  /*! \brief Desugars every rule; repetitions are expanded into optional chains. */
  static Bnf FromGrammar(const Grammar& grammar);
};

/*! \brief Left-to-right Earley recognizer over a Bnf. */
class ReferenceRecognizer {
 public:
  explicit ReferenceRecognizer(const Grammar& grammar);

  /*! \brief Drops all input. */
  void Reset();
  /*! \brief Returns false, leaving the state unchanged, if no parse continues with `byte`. */
  bool Feed(uint8_t byte);
  /*! \brief Keeps the first `length` bytes of input. */
  void Truncate(int32_t length);
  int32_t length() const { return static_cast<int32_t>(sets_.size()) - 1; }
  /*! \brief Whether the input read so far is a complete sentence. */
  bool Complete() const;

  /*! \brief Fresh run: is `text` a prefix of some sentence? */
  bool AcceptsPrefix(std::string_view text);
  /*! \brief Fresh run: is `text` a sentence? */
  bool Accepts(std::string_view text);

  const Bnf& bnf() const { return bnf_; }

 private:
  struct Item {
    int32_t prod;
    int32_t dot;
    int32_t origin;
  };
  void Close(int32_t index);
  void Add(std::vector<Item>& set, std::vector<uint64_t>& keys, const Item& item);

  Bnf bnf_;
  std::vector<int32_t> prod_offset_;
  std::vector<std::vector<Item>> sets_;
  std::vector<std::vector<uint64_t>> keys_;
  // Per set: (awaited nonterminal, item index), sorted.
  std::vector<std::vector<std::pair<int32_t, int32_t>>> waiting_;
};

/*! \brief Reference mask computation for one grammar. Deterministic; never touches a cache. */
class Oracle {
 public:
  explicit Oracle(const Grammar& grammar) : recognizer_(grammar) {}

  /*!
   * \brief Token v is allowed iff prefix·v is a viable prefix; EOS iff prefix is a sentence.
   * \throws Error(kInvalidPrefix) if the prefix itself is not viable.
   */
  TokenMask Mask(std::string_view prefix, const Vocabulary& vocab);

 private:
  ReferenceRecognizer recognizer_;
};

TokenMask OracleMask(const Grammar& grammar, std::string_view prefix, const Vocabulary& vocab);

struct OracleStep {
  int32_t position = 0;
  TokenMask mask;
  std::vector<int32_t> mismatches;
};

struct OracleReport {
  std::vector<OracleStep> steps;
  bool agreed = true;
  /*! \brief Bytes of the sampled trace. */
  std::string text;
  std::vector<int32_t> tokens;
};

struct DiffOptions {
  CompileOptions compile;
  JitConfig jit{true, 0};
  /*! \brief Shared pool; a fresh one is created when null. */
  std::shared_ptr<CachePool> pool;
  /*!
   * \brief Optional valid text steering the walk: while the trace still follows it, the longest
   * allowed token continuing it is taken with probability 0.9 instead of a uniform pick.
   */
  std::string guide;
  /*! \brief Test hook run before each engine mask, e.g. to corrupt a pool entry. */
  std::function<void(GrammarMatcher&)> before_mask;
};

/*!
 * \brief Seeded random decode: at each step the engine mask and the oracle mask are compared,
 * then a uniformly random token allowed by the oracle is taken. Stops after EOS or `steps`.
 */
OracleReport DiffTrace(const Grammar& grammar, std::shared_ptr<const Vocabulary> vocab,
                       int32_t steps, uint64_t seed, const DiffOptions& options = {});

}  // namespace gramdash

#endif  // GRAMDASH_ORACLE_H_
