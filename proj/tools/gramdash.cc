/*!
 *  Copyright (c) 2026 by Contributors
 * \file gramdash.cc
 * \brief Command-line front end: compile, mask, replay, oracle-diff, ac-stats, bench, gen-vocab.
 */
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "gramdash/bench.h"
#include "gramdash/dispatch.h"
#include "gramdash/matcher.h"
#include "gramdash/oracle.h"
#include "gramdash/tool_grammar.h"

namespace {

using namespace gramdash;
using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr int kBundleVersion = 1;

/*! \brief Exit status for a failed check (as opposed to a usage or module error). */
constexpr int kCheckFailed = 1;
constexpr int kModuleError = 2;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

struct GrammarSource {
  std::string path;
  std::string tool_format = "llama";
};

/*! \brief `.json` files hold a schema object or a tool array; anything else is EBNF text. */
Grammar LoadGrammar(const GrammarSource& src) {
  std::string text = ReadFile(src.path);
  if (!src.path.ends_with(".json")) return ParseEbnf(text);
  if (Json::parse(text).is_array()) {
    ToolFormat format = src.tool_format == "harmony_lite" ? ToolFormat::kHarmonyLite
                                                          : ToolFormat::kLlama;
    return BuildToolDispatch(ParseToolSpecs(text), format);
  }
  return SchemaToGrammar(ParseSchema(text));
}

std::shared_ptr<const Vocabulary> LoadVocabArg(const std::string& path) {
  if (path.empty()) return std::make_shared<const Vocabulary>(SyntheticVocab(500, 7));
  return std::make_shared<const Vocabulary>(LoadVocab(path, VocabFormatFromPath(path)));
}

void Emit(const Json& j, bool json, const std::string& text) {
  if (json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << text;
  }
}

std::string DumpFsm(const CompiledRule& rule, const CompiledGrammar& grammar) {
  std::ostringstream os;
  os << rule.name << " [" << RuleKindName(rule.kind) << "] hash=" << Hex64(rule.hash)
     << " states=" << rule.fsm.num_states() << "\n";
  for (int32_t s = 0; s < rule.fsm.num_states(); ++s) {
    os << "  " << s << (s == rule.fsm.initial() ? " (init)" : "")
       << (rule.fsm.IsFinal(s) ? " (final)" : "") << "\n";
    for (const auto& e : rule.fsm.edges(s)) {
      if (e.IsTerminal()) {
        os << "    [" << QuoteBytes(std::string(1, static_cast<char>(e.lower))) << "-"
           << QuoteBytes(std::string(1, static_cast<char>(e.upper))) << "] -> " << e.target << "\n";
      } else if (e.IsRuleRef()) {
        os << "    <" << grammar.rule(e.rule).name << "> -> " << e.target << "\n";
      } else {
        os << "    eps -> " << e.target << "\n";
      }
    }
  }
  return os.str();
}

Json FsmJson(const Fsm& fsm) {
  Json finals = Json::array(), edges = Json::array();
  for (int32_t s = 0; s < fsm.num_states(); ++s) {
    if (fsm.IsFinal(s)) finals.push_back(s);
    for (const auto& e : fsm.edges(s)) {
      edges.push_back({s, static_cast<int>(e.kind), e.lower, e.upper, e.rule, e.target});
    }
  }
  return {{"initial", fsm.initial()}, {"num_states", fsm.num_states()}, {"finals", finals},
          {"edges", edges}};
}

/****************** compile ******************/

struct CompileArgs {
  GrammarSource src;
  bool aot = false;
  int32_t jit_k = -1;
  int32_t rep_threshold = kDefaultRepetitionThreshold;
  bool no_compress = false;
  std::string vocab;
  bool dump_fsm = false;
  std::string out;
  bool json = false;
};

int RunCompile(const CompileArgs& a) {
  const Grammar grammar = LoadGrammar(a.src);
  auto vocab = LoadVocabArg(a.vocab);
  CompileOptions options;
  options.repetition_threshold = a.rep_threshold;
  options.compress_repetitions = !a.no_compress;
  auto start = Clock::now();
  auto compiled = CompiledGrammar::Compile(grammar, options);
  auto pool = std::make_shared<CachePool>();
  JitConfig jit{!a.aot, std::max(a.jit_k, 0)};
  const int32_t precompiled = JitPrecompile(compiled, *vocab, *pool, jit);
  const double compile_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();

  std::set<uint64_t> hashes;
  for (const auto& r : compiled->rules()) hashes.insert(r.hash);
  Json stats = {{"rules", compiled->num_rules()},
                {"fsm_states", compiled->total_states()},
                {"hashes", hashes.size()},
                {"precompiled_entries", precompiled},
                {"scannable_keys", EnumerateScannableKeys(*compiled, *vocab).size()},
                {"compile_ms", compile_ms}};

  if (!a.out.empty()) {
    Json rules = Json::array();
    for (const auto& r : compiled->rules()) {
      rules.push_back({{"name", r.name},
                       {"kind", RuleKindName(r.kind)},
                       {"hash", Hex64(r.hash)},
                       {"nullable", r.nullable},
                       {"rep_min", r.rep_min},
                       {"rep_max", r.rep_max},
                       {"lookahead", Hex64(r.lookahead.hash)},
                       {"fsm", FsmJson(r.fsm)}});
    }
    Json entries = Json::array();
    for (const auto& k : EnumerateScannableKeys(*compiled, *vocab)) {
      auto found = pool->Peek(k.key, compiled->rule(k.rule).lookahead.hash);
      if (found.kind != LookupKind::kPerfectHit) continue;
      entries.push_back({{"fsm_hash", Hex64(k.key.fsm_hash)},
                         {"state", k.key.state},
                         {"near_boundary", k.key.near_boundary},
                         {"accepted", found.entry->accepted.Serialize()},
                         {"uncertain", found.entry->uncertain}});
    }
    Json bundle = {{"format", "gramdash-bundle"},
                   {"version", kBundleVersion},
                   {"grammar", grammar.ToString()},
                   {"options",
                    {{"repetition_threshold", options.repetition_threshold},
                     {"compress_repetitions", options.compress_repetitions}}},
                   {"vocab_size", vocab->size()},
                   {"rules", rules},
                   {"entries", entries},
                   {"stats", stats}};
    std::ofstream(a.out) << bundle.dump(1) << "\n";
  }
  if (a.dump_fsm) {
    for (const auto& r : compiled->rules()) std::cerr << DumpFsm(r, *compiled);
  }
  std::ostringstream text;
  for (const auto& [key, value] : stats.items()) text << key << ": " << value.dump() << "\n";
  Emit(stats, a.json, text.str());
  return 0;
}

/****************** mask / replay / oracle-diff ******************/

struct StepArgs {
  GrammarSource src;
  std::string vocab;
  std::string prefix;
  std::string trace;
  int32_t steps = 50;
  uint64_t seed = 1;
  int32_t traces = 1;
  bool json = false;
};

int RunMask(const StepArgs& a) {
  auto grammar = CompiledGrammar::Compile(LoadGrammar(a.src));
  auto vocab = LoadVocabArg(a.vocab);
  GrammarMatcher matcher(grammar, vocab, std::make_shared<CachePool>());
  if (!matcher.AcceptBytes(a.prefix)) {
    throw Error(ErrorKind::kInvalidPrefix, "prefix rejected: " + QuoteBytes(a.prefix));
  }
  auto start = Clock::now();
  TokenMask mask = matcher.GenerateMask();
  const double us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();
  Json j = {{"allowed_count", mask.Count()}, {"mask_us", us}, {"mask", mask.Serialize()}};
  Emit(j, a.json, "allowed_count: " + std::to_string(mask.Count()) + "\nmask: " + mask.Serialize() + "\n");
  return 0;
}

int RunReplay(const StepArgs& a) {
  auto grammar = CompiledGrammar::Compile(LoadGrammar(a.src));
  auto vocab = LoadVocabArg(a.vocab);
  GrammarMatcher matcher(grammar, vocab, std::make_shared<CachePool>());
  std::ifstream in(a.trace);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + a.trace);
  std::string line;
  int32_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::kMalformedLine, "trace line " + std::to_string(line_no));
    }
    const int64_t step = record.value("step", static_cast<int64_t>(line_no - 1));
    const int32_t id = record.at("token_id").get<int32_t>();
    auto start = Clock::now();
    TokenMask mask = matcher.GenerateMask();
    const double us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();
    const bool accepted = id >= 0 && id < vocab->size() && mask.Test(id) && matcher.AcceptToken(id);
    std::cout << Json({{"step", step}, {"accepted", accepted}, {"mask_us", us},
                       {"allowed_count", mask.Count()}}).dump()
              << "\n";
    if (!accepted) {
      std::cerr << "step " << step << ": token " << id << " is not allowed\n";
      return kCheckFailed;
    }
  }
  return 0;
}

int RunOracleDiff(const StepArgs& a) {
  const Grammar grammar = LoadGrammar(a.src);
  auto vocab = LoadVocabArg(a.vocab);
  bool agreed = true;
  Json traces = Json::array();
  for (int32_t t = 0; t < a.traces; ++t) {
    OracleReport report = DiffTrace(grammar, vocab, a.steps, a.seed + t);
    int64_t mismatched = 0;
    Json first = nullptr;
    for (const auto& step : report.steps) {
      if (step.mismatches.empty()) continue;
      ++mismatched;
      if (first.is_null()) first = {{"position", step.position}, {"tokens", step.mismatches}};
    }
    agreed &= report.agreed;
    traces.push_back({{"seed", a.seed + t},
                      {"steps", report.steps.size()},
                      {"agreed", report.agreed},
                      {"mismatched_steps", mismatched},
                      {"first_mismatch", first}});
  }
  Json j = {{"agreed", agreed}, {"traces", traces}};
  std::ostringstream text;
  for (const auto& t : traces) {
    text << "seed " << t["seed"] << ": steps " << t["steps"] << ", "
         << (t["agreed"].get<bool>() ? "agreed" : "MISMATCH") << "\n";
  }
  text << (agreed ? "agreed\n" : "disagreed\n");
  Emit(j, a.json, text.str());
  return agreed ? 0 : kCheckFailed;
}

/****************** ac-stats ******************/

struct AcArgs {
  std::string tags_file;
  int32_t generate = 0;
  uint64_t seed = 0;
  bool json = false;
};

/*! \brief A JSON array of strings, or one tag per line. */
std::vector<std::string> LoadTags(const std::string& path) {
  std::string text = ReadFile(path);
  if (text.find_first_not_of(" \t\r\n") != std::string::npos &&
      text[text.find_first_not_of(" \t\r\n")] == '[') {
    return Json::parse(text).get<std::vector<std::string>>();
  }
  std::vector<std::string> tags;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tags.push_back(line);
  }
  return tags;
}

int RunAcStats(const AcArgs& a) {
  std::vector<std::string> tags =
      a.generate > 0 ? GenerateTags(a.generate, a.seed) : LoadTags(a.tags_file);
  if (tags.empty()) throw Error(ErrorKind::kEmptyTag, "no tags");
  AcAutomaton ac = AcAutomaton::Build(tags);
  auto [grammar, stats] = AcToEbnf(ac);
  int64_t total = 0;
  for (const auto& t : tags) total += static_cast<int64_t>(t.size());
  Json j = {{"tags", tags.size()},
            {"total_length", total},
            {"ac_states", stats.states},
            {"ac_transitions", stats.transitions},
            {"ebnf_size", stats.ebnf_size},
            {"ebnf_bytes", stats.ebnf_bytes}};
  std::ostringstream text;
  for (const auto& [key, value] : j.items()) text << key << ": " << value.dump() << "\n";
  Emit(j, a.json, text.str());
  return 0;
}

/****************** bench ******************/

struct BenchArgs {
  WorkloadSpec spec;
  std::string mode = "dynamic";
  std::string format = "llama";
  bool aot = false;
  int32_t jit_k = 0;
  std::string vocab;
  bool json = false;
};

int RunBench(BenchArgs a) {
  a.spec.mode = a.mode == "static" ? WorkloadMode::kStatic : WorkloadMode::kDynamic;
  a.spec.format = a.format == "harmony_lite" ? ToolFormat::kHarmonyLite : ToolFormat::kLlama;
  a.spec.jit = {!a.aot, a.jit_k};
  BenchReport r = RunWorkload(a.spec, LoadVocabArg(a.vocab));
  const Summary compile = Summarize(r.compile_ms_per_request);
  Json j = {{"structure_reuse_rate", r.structure_reuse_rate},
            {"substructure_reuse_rate", r.substructure_reuse_rate},
            {"compile_ms", {{"mean", compile.mean}, {"p50", compile.p50}, {"p90", compile.p90},
                            {"max", compile.max}}},
            {"per_token_us", {{"count", r.per_token_us.count}, {"mean", r.per_token_us.mean},
                              {"p50", r.per_token_us.p50}, {"p90", r.per_token_us.p90},
                              {"max", r.per_token_us.max}}},
            {"pool", {{"keys", r.pool.keys}, {"entries", r.pool.entries},
                      {"perfect_hits", r.pool.perfect_hits}, {"partial_hits", r.pool.partial_hits},
                      {"misses", r.pool.misses}, {"jit_deferred", r.pool.jit_deferred}}}};
  char text[512];
  std::snprintf(text, sizeof(text),
                "structure_reuse_rate: %.4f\nsubstructure_reuse_rate: %.4f\n"
                "compile_ms p50: %.3f\nper_token_us p50: %.2f p90: %.2f\n",
                r.structure_reuse_rate, r.substructure_reuse_rate, compile.p50,
                r.per_token_us.p50, r.per_token_us.p90);
  Emit(j, a.json, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gramdash: grammar-constrained token masking"};
  app.require_subcommand(1);

  auto add_grammar = [](CLI::App* cmd, GrammarSource* src) {
    cmd->add_option("grammar", src->path, "EBNF file, JSON schema (.json) or tool array (.json)")
        ->required();
    cmd->add_option("--format", src->tool_format, "tool format for tool arrays")
        ->check(CLI::IsMember({"llama", "harmony_lite"}));
  };

  CompileArgs compile;
  auto* c = app.add_subcommand("compile", "compile a grammar and report statistics");
  add_grammar(c, &compile.src);
  auto* aot = c->add_flag("--aot", compile.aot, "precompute every mask cache entry");
  c->add_option("--jit", compile.jit_k, "precompute the K costliest entries")->excludes(aot);
  c->add_option("--rep-threshold", compile.rep_threshold, "repetition compression threshold");
  c->add_flag("--no-compress", compile.no_compress, "disable repetition compression");
  c->add_option("--vocab", compile.vocab, "vocabulary (.jsonl or .tsv)");
  c->add_flag("--dump-fsm", compile.dump_fsm, "print rule FSMs to stderr");
  c->add_option("--out", compile.out, "write the compiled bundle");
  c->add_flag("--json", compile.json);

  StepArgs mask, replay, diff;
  auto* m = app.add_subcommand("mask", "token mask after a byte prefix");
  add_grammar(m, &mask.src);
  m->add_option("--vocab", mask.vocab);
  m->add_option("--prefix", mask.prefix, "bytes already generated");
  m->add_flag("--json", mask.json);

  auto* r = app.add_subcommand("replay", "replay a JSONL token trace");
  add_grammar(r, &replay.src);
  r->add_option("trace", replay.trace, "JSONL with {step, token_id}")->required();
  r->add_option("--vocab", replay.vocab);
  r->add_flag("--json", replay.json, "accepted for uniformity; output is always JSON lines");

  auto* o = app.add_subcommand("oracle-diff", "compare engine masks with reference masks");
  add_grammar(o, &diff.src);
  o->add_option("--vocab", diff.vocab);
  o->add_option("--steps", diff.steps)->check(CLI::PositiveNumber);
  o->add_option("--seed", diff.seed);
  o->add_option("--traces", diff.traces)->check(CLI::PositiveNumber);
  o->add_flag("--json", diff.json);

  AcArgs ac;
  auto* a = app.add_subcommand("ac-stats", "Aho-Corasick and EBNF sizes of a tag set");
  auto* tags_opt = a->add_option("tags", ac.tags_file, "tag file (lines or JSON array)");
  a->add_option("--generate", ac.generate, "generate tags of this total length")
      ->excludes(tags_opt);
  a->add_option("--seed", ac.seed);
  a->add_flag("--json", ac.json);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "dynamic tool-calling workload");
  b->add_option("--pool", bench.spec.pool_size);
  b->add_option("--tools", bench.spec.tools_per_request);
  b->add_option("--requests", bench.spec.requests);
  b->add_option("--mode", bench.mode)->check(CLI::IsMember({"static", "dynamic"}));
  b->add_option("--format", bench.format)->check(CLI::IsMember({"llama", "harmony_lite"}));
  b->add_option("--seed", bench.spec.seed);
  auto* baot = b->add_flag("--aot", bench.aot);
  b->add_option("--jit", bench.jit_k)->excludes(baot);
  b->add_option("--decode-steps", bench.spec.decode_steps);
  b->add_option("--warmups", bench.spec.timing_warmups);
  b->add_option("--reps", bench.spec.timing_reps);
  b->add_flag("--serial", bench.spec.serial);
  b->add_option("--vocab", bench.vocab);
  b->add_flag("--json", bench.json);

  int32_t vocab_size = 500;
  uint64_t vocab_seed = 7;
  std::string vocab_out;
  auto* g = app.add_subcommand("gen-vocab", "write a synthetic vocabulary");
  g->add_option("--size", vocab_size);
  g->add_option("--seed", vocab_seed);
  g->add_option("--out", vocab_out, ".jsonl or .tsv")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (c->parsed()) return RunCompile(compile);
    if (m->parsed()) return RunMask(mask);
    if (r->parsed()) return RunReplay(replay);
    if (o->parsed()) return RunOracleDiff(diff);
    if (a->parsed()) {
      if (ac.tags_file.empty() && ac.generate <= 0) throw CLI::RequiredError("tags or --generate");
      return RunAcStats(ac);
    }
    if (b->parsed()) return RunBench(bench);
    if (g->parsed()) {
      Vocabulary v = SyntheticVocab(vocab_size, vocab_seed);
      std::ofstream(vocab_out) << SerializeVocab(v, VocabFormatFromPath(vocab_out));
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kModuleError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kModuleError;
  }
  return 0;
}
