/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash/bench.h
 * \brief Dynamic tool-calling workloads, reuse measurement and timing helpers.
 */
#ifndef GRAMDASH_BENCH_H_
#define GRAMDASH_BENCH_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gramdash/compiled_grammar.h"
#include "gramdash/mask_cache.h"
#include "gramdash/tool_grammar.h"
#include "gramdash/vocab.h"

namespace gramdash {

enum class WorkloadMode { kStatic, kDynamic };

struct WorkloadSpec {
  int32_t pool_size = 100;
  int32_t tools_per_request = 20;
  int32_t requests = 100;
  WorkloadMode mode = WorkloadMode::kDynamic;
  uint64_t seed = 0;
  ToolFormat format = ToolFormat::kLlama;
  JitConfig jit{true, 0};
  /*! \brief Mask steps timed per request (random walk through the request grammar). */
  int32_t decode_steps = 16;
  /*! \brief Timing repetitions per request: warmups, then the median of `timing_reps`. */
  int32_t timing_warmups = 3;
  int32_t timing_reps = 5;
  /*! \brief Forces single-threaded compilation. */
  bool serial = false;
};

/*! \throws Error(kInvalidGrammar) when tools_per_request is not in [1, pool_size]. */
void ValidateWorkload(const WorkloadSpec& spec);

/*! \brief Tool indices per request; static mode repeats the first draw. Deterministic. */
std::vector<std::vector<int32_t>> SampleRequests(const WorkloadSpec& spec);

struct Summary {
  int64_t count = 0;
  double mean = 0, p50 = 0, p90 = 0, max = 0;
};

Summary Summarize(std::vector<double> values);

struct BenchReport {
  double structure_reuse_rate = 0;
  double substructure_reuse_rate = 0;
  std::vector<double> compile_ms_per_request;
  Summary per_token_us;
  PoolStats pool;
};

/*! \brief Worker count: GRAMDASH_THREADS if set, else the hardware concurrency (at least 1). */
int32_t BenchThreads();

/*!
 * \brief Runs the workload. Structure reuse is the fraction of requests whose grammar root hash
 * appeared in an earlier request; substructure reuse is the fraction of per-request scannable
 * (key, lookahead) pairs already produced by an earlier request. Both are deterministic.
 */
BenchReport RunWorkload(const WorkloadSpec& spec, std::shared_ptr<const Vocabulary> vocab);

/*! \brief Median wall time in milliseconds of `fn` after `warmups` untimed calls. */
double MedianMs(const std::function<void()>& fn, int32_t warmups = 3, int32_t reps = 5);

/*! \brief Seeded random walk of at most `steps` tokens through the grammar (EOS ends it). */
std::vector<int32_t> RandomWalk(const std::shared_ptr<const CompiledGrammar>& grammar,
                                std::shared_ptr<const Vocabulary> vocab,
                                std::shared_ptr<CachePool> pool, int32_t steps, uint64_t seed,
                                bool avoid_eos = true);

/*! \brief Replays tokens, returning the microseconds spent generating each step's mask. */
std::vector<double> TimeMasks(const std::shared_ptr<const CompiledGrammar>& grammar,
                              std::shared_ptr<const Vocabulary> vocab,
                              std::shared_ptr<CachePool> pool, const std::vector<int32_t>& tokens);

/*!
 * \brief Distinct random tags of the form `<name>` whose lengths sum to exactly `total_length`
 * (at least 6). Deterministic.
 */
std::vector<std::string> GenerateTags(int32_t total_length, uint64_t seed);

}  // namespace gramdash

#endif  // GRAMDASH_BENCH_H_
