/*!
 *  Copyright (c) 2026 by Contributors
 * \file mask_cache.cc
 */
#include "gramdash/mask_cache.h"

#include <algorithm>
#include <mutex>
#include <set>

#include "gramdash/earley.h"

namespace gramdash {

bool MaskCacheEntry::IsPartition(const Vocabulary& vocab) const {
  if (accepted.size() != vocab.size()) return false;
  std::vector<int> seen(vocab.size(), 0);
  for (int32_t id : accepted.AllowedIds()) ++seen[id];
  for (int32_t id : uncertain) {
    if (id < 0 || id >= vocab.size()) return false;
    ++seen[id];
  }
  for (int32_t id : rejected) {
    if (id < 0 || id >= vocab.size()) return false;
    ++seen[id];
  }
  if (accepted.Test(vocab.eos_id())) return false;
  if (!std::binary_search(uncertain.begin(), uncertain.end(), vocab.eos_id())) return false;
  return std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; });
}

/****************** Entry computation ******************/

namespace {

struct Simulation {
  bool consumed = false;
  std::vector<int32_t> cuts;
};

// Runs every non-EOS token from a local root, visiting tokens in sorted order so that shared
// prefixes are parsed once.
std::vector<Simulation> SimulateVocab(const std::shared_ptr<const CompiledGrammar>& grammar,
                                      const EarleyParser::LocalRoot& root,
                                      const Vocabulary& vocab) {
  EarleyParser parser(grammar, root);
  std::vector<Simulation> out(vocab.size());
  std::vector<bool> completed_at(1, false);
  bool previous_failed = false;
  const auto& ids = vocab.sorted_ids();
  const auto& lcp = vocab.sorted_lcp();
  for (size_t i = 0; i < ids.size(); ++i) {
    const std::string& token = vocab.token(ids[i]);
    const int32_t reached = parser.position();
    const int32_t keep = std::min(lcp[i], reached);
    parser.Rollback(keep);
    Simulation& sim = out[ids[i]];
    bool failed = previous_failed && lcp[i] > reached;
    if (!failed) {
      for (auto p = static_cast<size_t>(keep); p < token.size(); ++p) {
        if (!parser.Advance(static_cast<uint8_t>(token[p]))) {
          failed = true;
          break;
        }
        if (completed_at.size() <= p + 1) completed_at.resize(p + 2);
        completed_at[p + 1] = parser.RootCompleted();
      }
    }
    previous_failed = failed;
    const int32_t end = parser.position();
    sim.consumed = !failed;
    for (int32_t p = 1; p <= end && p < static_cast<int32_t>(token.size()); ++p) {
      if (completed_at[p]) sim.cuts.push_back(p);
    }
  }
  return out;
}

bool AdmittedUnder(const ContextToken& ct, const Lookahead& la, const Vocabulary& vocab) {
  if (ct.unconditional) return true;
  const std::string& token = vocab.token(ct.token);
  return std::any_of(ct.cuts.begin(), ct.cuts.end(), [&](int32_t cut) {
    return la.Admits(std::string_view(token).substr(cut));
  });
}

// Fills uncertain/rejected from the context tokens and the remaining ids.
void Classify(MaskCacheEntry* entry, const Vocabulary& vocab) {
  std::vector<bool> uncertain(vocab.size(), false);
  for (const auto& ct : entry->context_tokens) {
    if (AdmittedUnder(ct, entry->lookahead, vocab)) uncertain[ct.token] = true;
  }
  uncertain[vocab.eos_id()] = true;
  entry->uncertain.clear();
  entry->rejected.clear();
  for (int32_t id = 0; id < vocab.size(); ++id) {
    if (entry->accepted.Test(id)) continue;
    (uncertain[id] ? entry->uncertain : entry->rejected).push_back(id);
  }
}

}  // namespace

MaskCacheEntry ComputeEntry(const std::shared_ptr<const CompiledGrammar>& grammar, int32_t rule,
                            int32_t state, bool near_boundary, const Vocabulary& vocab) {
  const CompiledRule& r = grammar->rule(rule);
  if (state < 0 || state >= r.fsm.num_states() || r.states[state].terminals.empty()) {
    throw Error(ErrorKind::kNotScannable, r.name + " state " + std::to_string(state));
  }
  MaskCacheEntry entry;
  entry.accepted = TokenMask(vocab.size(), false);
  entry.lookahead = r.lookahead;

  const bool counted = r.kind == RuleKind::kRepeat && r.rep_max != kUnbounded;
  std::vector<Simulation> open = SimulateVocab(grammar, {rule, state, -1}, vocab);
  std::vector<Simulation> capped;
  if (counted) {
    const int32_t cap = near_boundary ? 0 : r.rep_window - 1;
    capped = SimulateVocab(grammar, {rule, state, cap}, vocab);
  }
  for (int32_t id : vocab.sorted_ids()) {
    const bool accepted = counted ? capped[id].consumed : open[id].consumed;
    if (accepted) {
      entry.accepted.Set(id);
      continue;
    }
    if (open[id].consumed || !open[id].cuts.empty()) {
      entry.context_tokens.push_back({id, open[id].consumed, std::move(open[id].cuts)});
    }
  }
  std::sort(entry.context_tokens.begin(), entry.context_tokens.end(),
            [](const ContextToken& a, const ContextToken& b) { return a.token < b.token; });
  Classify(&entry, vocab);
  return entry;
}

MaskCacheEntry AdaptEntry(const MaskCacheEntry& entry, const Lookahead& to,
                          const Vocabulary& vocab) {
  MaskCacheEntry out = entry;
  out.lookahead = to;
  Classify(&out, vocab);
  return out;
}

CacheKey KeyOf(const CompiledGrammar& grammar, int32_t rule, int32_t state, int32_t count) {
  const CompiledRule& r = grammar.rule(rule);
  bool near = r.kind == RuleKind::kRepeat && r.rep_max != kUnbounded &&
              r.rep_max - count < r.rep_window;
  return {r.hash, state, near};
}

/****************** Pool ******************/

LookupResult CachePool::Lookup(const CacheKey& key, uint64_t lookahead_hash) {
  LookupResult result = Peek(key, lookahead_hash);
  switch (result.kind) {
    case LookupKind::kPerfectHit:
      ++perfect_;
      break;
    case LookupKind::kPartialHit:
      ++partial_;
      break;
    case LookupKind::kMiss:
      ++misses_;
      break;
  }
  return result;
}

LookupResult CachePool::Peek(const CacheKey& key, uint64_t lookahead_hash) const {
  std::shared_lock lock(mutex_);
  auto it = map_.find(key);
  if (it == map_.end() || it->second.empty()) return {};
  for (const auto& [hash, entry] : it->second) {
    if (hash == lookahead_hash) return {LookupKind::kPerfectHit, entry};
  }
  return {LookupKind::kPartialHit, it->second.front().second};
}

void CachePool::Insert(const CacheKey& key, std::shared_ptr<const MaskCacheEntry> entry) {
  std::unique_lock lock(mutex_);
  auto& slots = map_[key];
  const uint64_t hash = entry->lookahead.hash;
  for (auto& slot : slots) {
    if (slot.first == hash) {
      slot.second = std::move(entry);
      return;
    }
  }
  slots.emplace_back(hash, std::move(entry));
}

PoolStats CachePool::stats() const {
  PoolStats s;
  {
    std::shared_lock lock(mutex_);
    s.keys = static_cast<int64_t>(map_.size());
    for (const auto& [key, slots] : map_) s.entries += static_cast<int64_t>(slots.size());
  }
  s.perfect_hits = perfect_;
  s.partial_hits = partial_;
  s.misses = misses_;
  s.jit_deferred = jit_deferred_;
  return s;
}

void CachePool::ResetStats() {
  perfect_ = partial_ = misses_ = jit_deferred_ = 0;
}

/****************** JIT ******************/

namespace {

int32_t ReachableStates(const Fsm& fsm, int32_t from) {
  std::vector<bool> seen(fsm.num_states(), false);
  std::vector<int32_t> stack{from};
  seen[from] = true;
  int32_t n = 0;
  while (!stack.empty()) {
    int32_t s = stack.back();
    stack.pop_back();
    ++n;
    for (const auto& e : fsm.edges(s)) {
      if (!seen[e.target]) {
        seen[e.target] = true;
        stack.push_back(e.target);
      }
    }
  }
  return n;
}

}  // namespace

std::vector<ScannableKey> EnumerateScannableKeys(const CompiledGrammar& grammar,
                                                 const Vocabulary& vocab) {
  std::vector<ScannableKey> out;
  std::set<std::tuple<uint64_t, int32_t, bool, uint64_t>> seen;
  for (int32_t r = 0; r < grammar.num_rules(); ++r) {
    const CompiledRule& rule = grammar.rule(r);
    const bool counted = rule.kind == RuleKind::kRepeat && rule.rep_max != kUnbounded;
    for (int32_t s = 0; s < rule.fsm.num_states(); ++s) {
      if (rule.states[s].terminals.empty()) continue;
      for (bool near : {false, true}) {
        if (near && !counted) continue;
        CacheKey key{rule.hash, s, near};
        if (!seen.insert({key.fsm_hash, s, near, rule.lookahead.hash}).second) continue;
        double cost = static_cast<double>(vocab.size()) * ReachableStates(rule.fsm, s);
        out.push_back({r, s, near, key, cost});
      }
    }
  }
  return out;
}

std::shared_ptr<const MaskCacheEntry> ObtainEntry(
    const std::shared_ptr<const CompiledGrammar>& grammar, int32_t rule, int32_t state,
    bool near_boundary, const Vocabulary& vocab, CachePool& pool) {
  const CompiledRule& r = grammar->rule(rule);
  CacheKey key{r.hash, state, near_boundary};
  LookupResult found = pool.Lookup(key, r.lookahead.hash);
  if (found.kind == LookupKind::kPerfectHit) return found.entry;
  auto entry = std::make_shared<MaskCacheEntry>(
      found.kind == LookupKind::kPartialHit
          ? AdaptEntry(*found.entry, r.lookahead, vocab)
          : ComputeEntry(grammar, rule, state, near_boundary, vocab)
  );
  if (!entry->IsPartition(vocab)) {
    throw Error(ErrorKind::kInvalidGrammar, "mask cache entry is not a partition of the vocabulary");
  }
  pool.Insert(key, entry);
  return entry;
}

int32_t JitPrecompile(const std::shared_ptr<const CompiledGrammar>& grammar,
                      const Vocabulary& vocab, CachePool& pool, const JitConfig& config) {
  std::vector<ScannableKey> keys = EnumerateScannableKeys(*grammar, vocab);
  size_t budget = keys.size();
  if (config.enabled) {
    budget = std::min(budget, static_cast<size_t>(std::max(config.k, 0)));
    std::stable_sort(keys.begin(), keys.end(), [](const ScannableKey& a, const ScannableKey& b) {
      return a.cost > b.cost;
    });
  }
  int32_t computed = 0;
  for (size_t i = 0; i < budget; ++i) {
    const auto& k = keys[i];
    if (pool.Peek(k.key, grammar->rule(k.rule).lookahead.hash).kind != LookupKind::kPerfectHit) {
      ObtainEntry(grammar, k.rule, k.state, k.near_boundary, vocab, pool);
    }
    ++computed;
  }
  pool.AddJitDeferred(static_cast<int64_t>(keys.size() - budget));
  return computed;
}

}  // namespace gramdash
