/*!
 *  Copyright (c) 2026 by Contributors
 * \file matcher.cc
 */
#include "gramdash/matcher.h"

#include <algorithm>
#include <set>

namespace gramdash {

GrammarMatcher::GrammarMatcher(std::shared_ptr<const CompiledGrammar> grammar,
                               std::shared_ptr<const Vocabulary> vocab,
                               std::shared_ptr<CachePool> pool)
    : grammar_(std::move(grammar)),
      vocab_(std::move(vocab)),
      pool_(std::move(pool)),
      parser_(grammar_) {
  rank_.assign(vocab_->size(), -1);
  const auto& ids = vocab_->sorted_ids();
  for (size_t i = 0; i < ids.size(); ++i) rank_[ids[i]] = static_cast<int32_t>(i);
}

TokenMask GrammarMatcher::GenerateMask() {
  const Vocabulary& vocab = *vocab_;
  TokenMask mask(vocab.size(), false);
  stats_ = {};
  if (terminated_) return mask;

  std::set<std::pair<int32_t, std::pair<int32_t, bool>>> visited;
  std::vector<int32_t> candidates;
  for (const auto& item : parser_.ScannableItems()) {
    ++stats_.scannable_items;
    const CacheKey key = KeyOf(*grammar_, item.rule, item.state, item.count);
    if (!visited.insert({item.rule, {item.state, key.near_boundary}}).second) continue;
    ++stats_.entries;
    auto entry = ObtainEntry(grammar_, item.rule, item.state, key.near_boundary, vocab, *pool_);
    if (shadow_verify_) {
      MaskCacheEntry fresh = ComputeEntry(grammar_, item.rule, item.state, key.near_boundary, vocab);
      if (!(fresh.accepted == entry->accepted) || fresh.uncertain != entry->uncertain) {
        throw Error(ErrorKind::kInvalidGrammar,
                    "cached entry differs from recomputation for rule " + grammar_->rule(item.rule).name);
      }
    }
    mask.Merge(entry->accepted);
    candidates.insert(candidates.end(), entry->uncertain.begin(), entry->uncertain.end());
  }

  // Uncertain tokens are trial-parsed in byte order so that shared prefixes are parsed once.
  std::erase_if(candidates, [&](int32_t id) { return id == vocab.eos_id() || mask.Test(id); });
  std::sort(candidates.begin(), candidates.end(),
            [&](int32_t a, int32_t b) { return rank_[a] < rank_[b]; });
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  const int32_t base = parser_.Checkpoint();
  const std::string* previous = nullptr;
  bool previous_failed = false;
  for (int32_t id : candidates) {
    ++stats_.uncertain_checked;
    const std::string& token = vocab.token(id);
    int32_t common = 0;
    if (previous) {
      auto mismatch = std::mismatch(previous->begin(), previous->end(), token.begin(), token.end());
      common = static_cast<int32_t>(mismatch.first - previous->begin());
    }
    const int32_t reached = parser_.position() - base;
    bool failed = previous_failed && common > reached;
    if (!failed) {
      parser_.Rollback(base + std::min(common, reached));
      for (size_t p = parser_.position() - base; p < token.size(); ++p) {
        if (!parser_.Advance(static_cast<uint8_t>(token[p]))) {
          failed = true;
          break;
        }
      }
    }
    if (!failed) mask.Set(id);
    previous = &token;
    previous_failed = failed;
  }
  parser_.Rollback(base);
  if (parser_.CanTerminate()) mask.Set(vocab.eos_id());
  return mask;
}

bool GrammarMatcher::AcceptToken(int32_t id) {
  if (terminated_) return false;
  if (id < 0 || id >= vocab_->size()) {
    throw Error(ErrorKind::kIndexOutOfRange, "token " + std::to_string(id));
  }
  if (id == vocab_->eos_id()) {
    if (!parser_.CanTerminate()) return false;
    terminated_ = true;
    return true;
  }
  return AcceptBytes(vocab_->token(id));
}

bool GrammarMatcher::AcceptBytes(std::string_view bytes) {
  if (terminated_) return false;
  if (!parser_.AdvanceBytes(bytes)) return false;
  consumed_.append(bytes);
  return true;
}

}  // namespace gramdash
