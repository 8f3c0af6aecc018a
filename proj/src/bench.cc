/*!
 *  Copyright (c) 2026 by Contributors
 * \file bench.cc
 */
#include "gramdash/bench.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "gramdash/matcher.h"

namespace gramdash {

namespace {

using Clock = std::chrono::steady_clock;

double ElapsedUs(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

}  // namespace

void ValidateWorkload(const WorkloadSpec& spec) {
  if (spec.pool_size < 1 || spec.tools_per_request < 1 ||
      spec.tools_per_request > spec.pool_size || spec.requests < 0) {
    throw Error(ErrorKind::kInvalidGrammar, "workload needs 1 <= tools_per_request <= pool_size");
  }
}

std::vector<std::vector<int32_t>> SampleRequests(const WorkloadSpec& spec) {
  ValidateWorkload(spec);
  std::mt19937_64 rng(spec.seed ^ 0x5bd1e995u);
  auto draw = [&] {
    std::vector<int32_t> ids(spec.pool_size);
    std::iota(ids.begin(), ids.end(), 0);
    for (int32_t i = 0; i < spec.tools_per_request; ++i) {
      auto j = i + static_cast<int32_t>(rng() % static_cast<uint64_t>(spec.pool_size - i));
      std::swap(ids[i], ids[j]);
    }
    ids.resize(spec.tools_per_request);
    return ids;
  };
  std::vector<std::vector<int32_t>> out;
  for (int32_t r = 0; r < spec.requests; ++r) {
    out.push_back(spec.mode == WorkloadMode::kStatic && r > 0 ? out.front() : draw());
  }
  return out;
}

Summary Summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.count = static_cast<int64_t>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.p50 = values[values.size() / 2];
  s.p90 = values[std::min(values.size() - 1, values.size() * 9 / 10)];
  s.max = values.back();
  return s;
}

int32_t BenchThreads() {
  if (const char* env = std::getenv("GRAMDASH_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double MedianMs(const std::function<void()>& fn, int32_t warmups, int32_t reps) {
  for (int32_t i = 0; i < warmups; ++i) fn();
  std::vector<double> times;
  for (int32_t i = 0; i < std::max(reps, 1); ++i) {
    auto start = Clock::now();
    fn();
    times.push_back(ElapsedUs(start) / 1000.0);
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

std::vector<int32_t> RandomWalk(const std::shared_ptr<const CompiledGrammar>& grammar,
                                std::shared_ptr<const Vocabulary> vocab,
                                std::shared_ptr<CachePool> pool, int32_t steps, uint64_t seed,
                                bool avoid_eos) {
  GrammarMatcher matcher(grammar, vocab, std::move(pool));
  std::mt19937_64 rng(seed);
  std::vector<int32_t> tokens;
  for (int32_t i = 0; i < steps; ++i) {
    std::vector<int32_t> allowed = matcher.GenerateMask().AllowedIds();
    if (avoid_eos && allowed.size() > 1) std::erase(allowed, vocab->eos_id());
    if (allowed.empty()) break;
    int32_t id = allowed[rng() % allowed.size()];
    matcher.AcceptToken(id);
    tokens.push_back(id);
    if (id == vocab->eos_id()) break;
  }
  return tokens;
}

std::vector<double> TimeMasks(const std::shared_ptr<const CompiledGrammar>& grammar,
                              std::shared_ptr<const Vocabulary> vocab,
                              std::shared_ptr<CachePool> pool, const std::vector<int32_t>& tokens) {
  GrammarMatcher matcher(grammar, vocab, std::move(pool));
  std::vector<double> out;
  for (int32_t id : tokens) {
    auto start = Clock::now();
    TokenMask mask = matcher.GenerateMask();
    out.push_back(ElapsedUs(start));
    if (!mask.Test(id) || !matcher.AcceptToken(id)) break;
  }
  return out;
}

BenchReport RunWorkload(const WorkloadSpec& spec, std::shared_ptr<const Vocabulary> vocab) {
  const auto requests = SampleRequests(spec);
  const auto tools = GenToolPool(spec.pool_size, spec.seed);
  const auto n = static_cast<int32_t>(requests.size());
  auto pool = std::make_shared<CachePool>();

  std::vector<std::shared_ptr<const CompiledGrammar>> compiled(n);
  std::vector<double> compile_ms(n, 0.0);
  std::vector<std::vector<double>> token_us(n);
  std::atomic<int32_t> next{0};
  auto worker = [&] {
    for (int32_t r = next++; r < n; r = next++) {
      std::vector<ToolSpec> picked;
      for (int32_t id : requests[r]) picked.push_back(tools[id]);
      const Grammar grammar = BuildToolDispatch(picked, spec.format);
      compile_ms[r] = MedianMs([&] { compiled[r] = CompiledGrammar::Compile(grammar); },
                               spec.timing_warmups, spec.timing_reps);
      JitPrecompile(compiled[r], *vocab, *pool, spec.jit);
      if (spec.decode_steps > 0) {
        auto walk = RandomWalk(compiled[r], vocab, pool, spec.decode_steps, spec.seed + r);
        token_us[r] = TimeMasks(compiled[r], vocab, pool, walk);
      }
    }
  };
  const int32_t threads = spec.serial ? 1 : std::min(BenchThreads(), std::max(n, 1));
  std::vector<std::thread> workers;
  for (int32_t t = 1; t < threads; ++t) workers.emplace_back(worker);
  worker();
  for (auto& w : workers) w.join();

  BenchReport report;
  report.compile_ms_per_request = compile_ms;
  std::set<uint64_t> roots;
  std::set<std::tuple<uint64_t, int32_t, bool, uint64_t>> seen_keys;
  int64_t structure_hits = 0, key_total = 0, key_hits = 0;
  for (int32_t r = 0; r < n; ++r) {
    if (!roots.insert(compiled[r]->root_hash()).second) ++structure_hits;
    std::set<std::tuple<uint64_t, int32_t, bool, uint64_t>> mine;
    for (const auto& k : EnumerateScannableKeys(*compiled[r], *vocab)) {
      mine.insert({k.key.fsm_hash, k.key.state, k.key.near_boundary,
                   compiled[r]->rule(k.rule).lookahead.hash});
    }
    for (const auto& k : mine) {
      ++key_total;
      key_hits += seen_keys.count(k);
    }
    seen_keys.insert(mine.begin(), mine.end());
  }
  if (n > 0) report.structure_reuse_rate = static_cast<double>(structure_hits) / n;
  if (key_total > 0) report.substructure_reuse_rate = static_cast<double>(key_hits) / key_total;
  std::vector<double> all_us;
  for (const auto& v : token_us) all_us.insert(all_us.end(), v.begin(), v.end());
  report.per_token_us = Summarize(std::move(all_us));
  report.pool = pool->stats();
  return report;
}

std::vector<std::string> GenerateTags(int32_t total_length, uint64_t seed) {
  if (total_length < 6) throw Error(ErrorKind::kEmptyTag, "tag set too short");
  std::mt19937_64 rng(seed);
  std::set<std::string> used;
  std::vector<std::string> tags;
  int32_t left = total_length;
  while (left > 0) {
    // Lengths in [6, 16]; the last tag absorbs the remainder.
    int32_t len = 6 + static_cast<int32_t>(rng() % 11);
    if (left - len < 6) len = left;
    std::string tag;
    do {
      tag = "<";
      for (int32_t i = 0; i < len - 2; ++i) tag += static_cast<char>('a' + rng() % 26);
      tag += ">";
    } while (!used.insert(tag).second);
    tags.push_back(tag);
    left -= len;
  }
  return tags;
}

}  // namespace gramdash
