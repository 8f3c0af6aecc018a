/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/matcher.h
 * \brief Per-request decoding state: token acceptance and mask generation.
 */
#ifndef GRAMDASH_MATCHER_H_
#define GRAMDASH_MATCHER_H_

#include <cstdint>
#include <memory>
#include <vector>

#include "gramdash/earley.h"
#include "gramdash/mask_cache.h"
#include "gramdash/vocab.h"

namespace gramdash {

struct MaskStats {
  int32_t scannable_items = 0;
  int32_t entries = 0;
  int32_t uncertain_checked = 0;
};

class GrammarMatcher {
 public:
  GrammarMatcher(std::shared_ptr<const CompiledGrammar> grammar,
                 std::shared_ptr<const Vocabulary> vocab, std::shared_ptr<CachePool> pool);

  /*! \brief Allowed tokens at the current position. Empty once EOS has been accepted. */
  TokenMask GenerateMask();
  /*!
   * \brief Consumes one token. EOS is accepted iff the parse can terminate, after which no token
   * is accepted. Returns false and leaves the state unchanged on rejection.
   */
  bool AcceptToken(int32_t id);
  /*! \brief Consumes raw bytes (no EOS). */
  bool AcceptBytes(std::string_view bytes);

  bool CanTerminate() const { return !terminated_ && parser_.CanTerminate(); }
  bool IsTerminated() const { return terminated_; }
  /*! \brief Bytes consumed so far. */
  const std::string& consumed() const { return consumed_; }

  const MaskStats& last_stats() const { return stats_; }
  EarleyParser& parser() { return parser_; }
  CachePool& pool() { return *pool_; }
  const CompiledGrammar& grammar() const { return *grammar_; }

  /*!
   * \brief Test flag: every pool hit is recomputed from scratch and compared; a difference
   * throws Error(kInvalidGrammar).
   */
  void set_shadow_verify(bool on) { shadow_verify_ = on; }

 private:
  std::shared_ptr<const CompiledGrammar> grammar_;
  std::shared_ptr<const Vocabulary> vocab_;
  std::shared_ptr<CachePool> pool_;
  EarleyParser parser_;
  bool terminated_ = false;
  bool shadow_verify_ = false;
  std::string consumed_;
  std::vector<int32_t> rank_;
  MaskStats stats_;
};

}  // namespace gramdash

#endif  // GRAMDASH_MATCHER_H_
