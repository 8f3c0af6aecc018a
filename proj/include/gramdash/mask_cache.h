/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/mask_cache.h
 * \brief Adaptive token mask cache: per-state vocabulary partitions shared across grammars.
 *
 * For a scannable parser state, every token is classified by simulating it inside the state's
 * rule alone. Tokens the rule consumes entirely are accepted, tokens that can only continue
 * after the rule completes are uncertain and are checked against the full parser at runtime,
 * and the rest are rejected. Entries are keyed by the rule's structural hash, so grammars that
 * share a rule body share its entries.
 */
#ifndef GRAMDASH_MASK_CACHE_H_
#define GRAMDASH_MASK_CACHE_H_

#include <atomic>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "gramdash/compiled_grammar.h"
#include "gramdash/vocab.h"

namespace gramdash {

struct CacheKey {
  uint64_t fsm_hash = 0;
  int32_t state = 0;
  /*!
   * \brief For bounded repetition rules: fewer than `rep_window` further body matches may remain,
   * so only tokens that stay within the current body match are accepted outright.
   */
  bool near_boundary = false;

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

struct CacheKeyHash {
  size_t operator()(const CacheKey& key) const {
    return static_cast<size_t>(HashCombine(key.fsm_hash, static_cast<uint64_t>(key.state),
                                           key.near_boundary ? 1 : 0));
  }
};

/*! \brief A token whose classification depends on what may follow the rule. */
struct ContextToken {
  int32_t token = 0;
  /*! \brief The token is uncertain regardless of the lookahead. */
  bool unconditional = false;
  /*! \brief Prefix lengths at which the rule can complete, leaving the rest of the token outside. */
  std::vector<int32_t> cuts;
};

struct MaskCacheEntry {
  TokenMask accepted;
  /*! \brief Sorted token ids; always contains EOS. */
  std::vector<int32_t> uncertain;
  std::vector<int32_t> rejected;
  /*! \brief Tokens rechecked when the entry is moved to another lookahead. */
  std::vector<ContextToken> context_tokens;
  Lookahead lookahead;

  /*! \brief Accepted, uncertain and rejected partition the vocabulary; EOS is uncertain. */
  bool IsPartition(const Vocabulary& vocab) const;
};

/*!
 * \brief Computes the entry of `state` in `rule` under the rule's own lookahead.
 * \throws Error(kNotScannable) when the state has no terminal edge.
 */
MaskCacheEntry ComputeEntry(const std::shared_ptr<const CompiledGrammar>& grammar, int32_t rule,
                            int32_t state, bool near_boundary, const Vocabulary& vocab);

/*! \brief Reclassifies the lookahead-dependent tokens of `entry` under `to`. */
MaskCacheEntry AdaptEntry(const MaskCacheEntry& entry, const Lookahead& to,
                          const Vocabulary& vocab);

/*! \brief Cache key of a parser item's state. */
CacheKey KeyOf(const CompiledGrammar& grammar, int32_t rule, int32_t state, int32_t count);

struct PoolStats {
  int64_t keys = 0;
  int64_t entries = 0;
  int64_t perfect_hits = 0;
  int64_t partial_hits = 0;
  int64_t misses = 0;
  int64_t jit_deferred = 0;
};

enum class LookupKind { kPerfectHit, kPartialHit, kMiss };

struct LookupResult {
  LookupKind kind = LookupKind::kMiss;
  std::shared_ptr<const MaskCacheEntry> entry;
};

/*!
 * \brief Thread-safe pool of entries keyed by (CacheKey, lookahead hash). Concurrent inserts of
 * the same slot keep the last writer; entries are deterministic so the writers agree.
 */
class CachePool {
 public:
  LookupResult Lookup(const CacheKey& key, uint64_t lookahead_hash);
  /*! \brief Lookup without touching the statistics. */
  LookupResult Peek(const CacheKey& key, uint64_t lookahead_hash) const;
  /*! \brief Replaces any entry in the same slot. Entries are not validated here. */
  void Insert(const CacheKey& key, std::shared_ptr<const MaskCacheEntry> entry);
  void AddJitDeferred(int64_t n) { jit_deferred_ += n; }

  PoolStats stats() const;
  void ResetStats();

 private:
  using Slot = std::pair<uint64_t, std::shared_ptr<const MaskCacheEntry>>;

  mutable std::shared_mutex mutex_;
  std::unordered_map<CacheKey, std::vector<Slot>, CacheKeyHash> map_;
  std::atomic<int64_t> perfect_{0}, partial_{0}, misses_{0}, jit_deferred_{0};
};

/*! \brief One scannable state of a compiled grammar. */
struct ScannableKey {
  int32_t rule = 0;
  int32_t state = 0;
  bool near_boundary = false;
  CacheKey key;
  /*! \brief |V| times the number of rule states reachable from the dot. */
  double cost = 0;
};

/*! \brief Every distinct scannable (key, lookahead) of the grammar, in rule and state order. */
std::vector<ScannableKey> EnumerateScannableKeys(const CompiledGrammar& grammar,
                                                 const Vocabulary& vocab);

struct JitConfig {
  /*! \brief When false every key is precompiled. */
  bool enabled = true;
  int32_t k = 0;
};

/*!
 * \brief Fills the pool with the K costliest entries (all entries when JIT is disabled); the
 * remaining keys are computed on first use. Returns the number of entries precompiled.
 */
int32_t JitPrecompile(const std::shared_ptr<const CompiledGrammar>& grammar,
                      const Vocabulary& vocab, CachePool& pool, const JitConfig& config);

/*!
 * \brief Entry for a state from the pool: perfect hits are returned as is, partial hits are
 * adapted, misses are computed. New entries are validated and inserted.
 */
std::shared_ptr<const MaskCacheEntry> ObtainEntry(
    const std::shared_ptr<const CompiledGrammar>& grammar, int32_t rule, int32_t state,
    bool near_boundary, const Vocabulary& vocab, CachePool& pool);

}  // namespace gramdash

#endif  // GRAMDASH_MASK_CACHE_H_
