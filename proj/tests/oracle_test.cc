/*!
 *  Copyright (c) 2026 by Contributors
 * \file oracle_test.cc
 */
#include <gtest/gtest.h>

#include "corpus.h"
#include "gramdash/matcher.h"
#include "gramdash/oracle.h"

namespace gramdash {
namespace {

std::vector<std::string> Allowed(const Vocabulary& v, const TokenMask& m) {
  std::vector<std::string> out;
  for (int32_t id : m.AllowedIds()) out.push_back(id == v.eos_id() ? "<eos>" : v.token(id));
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Bnf, DesugarsRepetitionsExactly) {
  Bnf bnf = Bnf::FromGrammar(ParseEbnf(R"(root ::= "x"{2,3})"));
  EXPECT_GT(bnf.num_nonterminals, 1);
  ReferenceRecognizer rec(ParseEbnf(R"(root ::= "x"{2,3})"));
  for (int n = 0; n <= 5; ++n) EXPECT_EQ(rec.Accepts(std::string(n, 'x')), n == 2 || n == 3) << n;
}

TEST(ReferenceRecognizer, FeedTruncate) {
  ReferenceRecognizer rec(testing::JsonLite());
  EXPECT_TRUE(rec.Feed('['));
  EXPECT_TRUE(rec.Feed('1'));
  EXPECT_FALSE(rec.Feed('}'));
  EXPECT_EQ(rec.length(), 2);
  EXPECT_TRUE(rec.Feed(']'));
  EXPECT_TRUE(rec.Complete());
  rec.Truncate(1);
  EXPECT_EQ(rec.length(), 1);
  EXPECT_FALSE(rec.Complete());
  EXPECT_TRUE(rec.Feed(']'));
  EXPECT_TRUE(rec.Complete());
  rec.Reset();
  EXPECT_EQ(rec.length(), 0);
}

TEST(ReferenceRecognizer, LeftRecursionAndNullables) {
  ReferenceRecognizer rec(ParseEbnf("root ::= a a \"x\" b\na ::= \"a\"?\nb ::= b \"b\" | \"\""));
  EXPECT_TRUE(rec.Accepts("x"));
  EXPECT_TRUE(rec.Accepts("aaxbbb"));
  EXPECT_FALSE(rec.Accepts("aaax"));
  EXPECT_TRUE(rec.AcceptsPrefix("a"));
  EXPECT_FALSE(rec.AcceptsPrefix("b"));
}

TEST(ReferenceRecognizer, TagDispatchSemantics) {
  ReferenceRecognizer rec(ParseEbnf(R"g(root ::= TagDispatch(("ab", call), ("b", call); stop="$")
call ::= "!")g"));
  EXPECT_TRUE(rec.Accepts("$"));
  EXPECT_TRUE(rec.Accepts("xx ab! b! $"));
  // The longest tag ending at a byte fires.
  EXPECT_FALSE(rec.AcceptsPrefix("abx"));
  EXPECT_FALSE(rec.Accepts("ab!"));
  EXPECT_FALSE(rec.AcceptsPrefix("$x"));
}

TEST(OracleMask, RightRecursiveAlternatives) {
  Vocabulary vocab({"a", "b", "ab", "ba", "c", ""}, 5);
  EXPECT_EQ(Allowed(vocab, OracleMask(ParseEbnf(R"(root ::= "a" | "b" root)"), "", vocab)),
            (std::vector<std::string>{"a", "b", "ba"}));
}

TEST(OracleMask, CompleteSentenceOnlyEos) {
  Vocabulary vocab({"a", "b", "ab", ""}, 3);
  EXPECT_EQ(Allowed(vocab, OracleMask(ParseEbnf(R"(root ::= "ab")"), "ab", vocab)),
            std::vector<std::string>{"<eos>"});
}

TEST(OracleMask, InvalidPrefix) {
  Vocabulary vocab({"a", ""}, 1);
  try {
    OracleMask(ParseEbnf(R"(root ::= "ab")"), "b", vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidPrefix);
  }
}

TEST(OracleMask, Deterministic) {
  Vocabulary vocab = SyntheticVocab(400, 3);
  Grammar g = testing::JsonLite();
  Oracle oracle(g);
  for (std::string prefix : {"", "[", "{\"a\":", "[1,[tr"}) {
    TokenMask first = oracle.Mask(prefix, vocab);
    EXPECT_EQ(oracle.Mask(prefix, vocab), first);
    EXPECT_EQ(OracleMask(g, prefix, vocab), first);
  }
}

TEST(OracleMask, MatchesBruteForce) {
  // Allowed iff every byte of prefix+token is accepted by a fresh run.
  Vocabulary vocab = SyntheticVocab(250, 9);
  for (const auto& c : testing::Corpus()) {
    std::mt19937_64 rng(c.name.size());
    const std::string sample = c.sample(rng);
    const std::string prefix = sample.substr(0, sample.size() / 2);
    TokenMask mask = OracleMask(c.grammar, prefix, vocab);
    ReferenceRecognizer fresh(c.grammar);
    for (int32_t id = 0; id < vocab.size(); ++id) {
      const bool expected = id == vocab.eos_id() ? fresh.Accepts(prefix)
                                                 : fresh.AcceptsPrefix(prefix + vocab.token(id));
      ASSERT_EQ(mask.Test(id), expected) << c.name << " token " << id;
    }
  }
}

TEST(DiffTrace, CorpusGrammarAgrees) {
  auto vocab = std::make_shared<const Vocabulary>(SyntheticVocab(300, 7));
  OracleReport report = DiffTrace(testing::JsonLite(), vocab, 50, 1);
  EXPECT_TRUE(report.agreed);
  EXPECT_FALSE(report.steps.empty());
  for (const auto& step : report.steps) EXPECT_TRUE(step.mismatches.empty());
}

TEST(DiffTrace, GuideSteersTowardsSample) {
  auto vocab = std::make_shared<const Vocabulary>(SyntheticVocab(300, 7));
  const auto& llama = testing::Corpus()[15];
  ASSERT_EQ(llama.name, "llama_5_tools");
  std::mt19937_64 rng(3);
  DiffOptions options;
  options.guide = llama.sample(rng);
  OracleReport report = DiffTrace(llama.grammar, vocab, 200, 5, options);
  EXPECT_TRUE(report.agreed);
  EXPECT_NE(report.text.find("<function="), std::string::npos) << report.text;
}

TEST(DiffTrace, CorruptedEntryIsReported) {
  auto vocab = std::make_shared<const Vocabulary>(SyntheticVocab(300, 7));
  const Grammar grammar = ParseEbnf(R"(root ::= [a-z]+ ".")");
  int32_t corrupted = -1;
  DiffOptions options;
  options.before_mask = [&](GrammarMatcher& m) {
    if (corrupted >= 0) return;
    const EarleyItem item = m.parser().ScannableItems().front();
    const CompiledGrammar& g = m.grammar();
    const CacheKey key = KeyOf(g, item.rule, item.state, item.count);
    auto found = m.pool().Peek(key, g.rule(item.rule).lookahead.hash);
    ASSERT_EQ(found.kind, LookupKind::kPerfectHit);
    auto bad = std::make_shared<MaskCacheEntry>(*found.entry);
    for (int32_t id : bad->rejected) {
      if (vocab->token(id) == "9") corrupted = id;
    }
    ASSERT_GE(corrupted, 0);
    bad->accepted.Set(corrupted);
    std::erase(bad->rejected, corrupted);
    m.pool().Insert(key, bad);
  };
  options.jit = {false, 0};
  OracleReport report = DiffTrace(grammar, vocab, 5, 2, options);
  EXPECT_FALSE(report.agreed);
  ASSERT_FALSE(report.steps.empty());
  EXPECT_EQ(report.steps[0].mismatches, std::vector<int32_t>{corrupted});
}

TEST(DiffTrace, EmptyLanguageSingleStep) {
  auto vocab = std::make_shared<const Vocabulary>(SyntheticVocab(200, 7));
  OracleReport report = DiffTrace(ParseEbnf(R"(root ::= "")"), vocab, 1, 0);
  EXPECT_TRUE(report.agreed);
  ASSERT_EQ(report.steps.size(), 1u);
  EXPECT_EQ(report.steps[0].mask.AllowedIds(), std::vector<int32_t>{vocab->eos_id()});
}

}  // namespace
}  // namespace gramdash
