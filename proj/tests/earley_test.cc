/*!
 *  Copyright (c) 2026 by Contributors
 * \file earley_test.cc
 */
#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "corpus.h"
#include "gramdash/earley.h"
#include "gramdash/oracle.h"

namespace gramdash {
namespace {

std::shared_ptr<const CompiledGrammar> Compile(std::string_view text) {
  return CompiledGrammar::Compile(ParseEbnf(text));
}

std::set<std::string> RulesAt(const EarleyParser& p, int32_t pos) {
  std::set<std::string> out;
  for (const auto& item : p.Items(pos)) out.insert(p.grammar().rule(item.rule).name);
  return out;
}

TEST(EarleyParser, InitialChartPredictsRoot) {
  EarleyParser p(Compile(R"(root ::= "ab")"));
  EXPECT_EQ(p.position(), 0);
  auto items = p.Items(0);
  ASSERT_EQ(items.size(), 2u);
  const int32_t start = p.grammar().start_rule();
  EXPECT_EQ(items[0], (EarleyItem{start, p.grammar().rule(start).fsm.initial(), 0, 0}));
  EXPECT_EQ(p.grammar().rule(items[1].rule).name, "root");
  EXPECT_EQ(items[1].state, p.grammar().rule(items[1].rule).fsm.initial());
  EXPECT_EQ(items[1].origin, 0);
}

TEST(EarleyParser, PredictionCascades) {
  EarleyParser p(Compile("root ::= sub\nsub ::= \"x\""));
  EXPECT_TRUE(RulesAt(p, 0).count("sub"));
}

TEST(EarleyParser, LeftRecursionTerminates) {
  EarleyParser p(Compile(R"(root ::= root "a" | "a")"));
  EXPECT_LE(p.Items(0).size(), 4u);
  EXPECT_TRUE(p.AdvanceBytes("aaaa"));
  EXPECT_TRUE(p.CanTerminate());
}

TEST(EarleyParser, RejectLeavesStateUnchanged) {
  EarleyParser p(Compile(R"(root ::= "ab")"));
  EXPECT_TRUE(p.Advance('a'));
  const std::string before = p.SerializeCharts();
  EXPECT_FALSE(p.Advance('c'));
  EXPECT_EQ(p.SerializeCharts(), before);
  EXPECT_EQ(p.position(), 1);
}

TEST(EarleyParser, RightRecursion) {
  EarleyParser p(Compile(R"(root ::= "a" root | "b")"));
  for (char c : std::string("aab")) EXPECT_TRUE(p.Advance(static_cast<uint8_t>(c)));
  EXPECT_TRUE(p.CanTerminate());
}

TEST(EarleyParser, Termination) {
  auto g = Compile(R"(root ::= "ab")");
  EarleyParser full(g);
  EXPECT_TRUE(full.AdvanceBytes("ab"));
  EXPECT_TRUE(full.CanTerminate());
  EarleyParser half(g);
  EXPECT_TRUE(half.AdvanceBytes("a"));
  EXPECT_FALSE(half.CanTerminate());
}

TEST(EarleyParser, TagDispatchWithoutStopsCanTerminate) {
  EarleyParser p(Compile("root ::= TagDispatch((\"<f>\", call))\ncall ::= \"{}\""));
  EXPECT_TRUE(p.CanTerminate());
  EXPECT_TRUE(p.AdvanceBytes("hello <"));
  EXPECT_TRUE(p.CanTerminate());
  EXPECT_TRUE(p.AdvanceBytes("f>{"));
  EXPECT_FALSE(p.CanTerminate());
  EXPECT_FALSE(p.Advance('x'));
  EXPECT_TRUE(p.Advance('}'));
  EXPECT_TRUE(p.CanTerminate());
}

TEST(EarleyParser, CheckpointRollback) {
  EarleyParser p(CompiledGrammar::Compile(testing::JsonLite()));
  ASSERT_TRUE(p.AdvanceBytes("[1,"));
  const int32_t mark = p.Checkpoint();
  EXPECT_EQ(mark, 3);
  const std::string snapshot = p.SerializeCharts();
  ASSERT_TRUE(p.AdvanceBytes("22,3"));
  EXPECT_EQ(p.position(), 7);
  p.Rollback(mark);
  EXPECT_EQ(p.position(), 3);
  EXPECT_EQ(p.SerializeCharts(), snapshot);
  p.Rollback(mark);
  EXPECT_EQ(p.SerializeCharts(), snapshot);
  EXPECT_THROW(p.Rollback(9), Error);
}

TEST(EarleyParser, RollbackToZeroEqualsFresh) {
  auto g = CompiledGrammar::Compile(testing::JsonLite());
  EarleyParser p(g);
  ASSERT_TRUE(p.AdvanceBytes("{\"a\":[true]}"));
  p.Rollback(0);
  EXPECT_EQ(p.SerializeCharts(), EarleyParser(g).SerializeCharts());
}

TEST(EarleyParser, AdvanceBytesRestoresOnFailure) {
  EarleyParser p(CompiledGrammar::Compile(testing::JsonLite()));
  ASSERT_TRUE(p.AdvanceBytes("[1"));
  const std::string snapshot = p.SerializeCharts();
  EXPECT_FALSE(p.AdvanceBytes(",2]]"));
  EXPECT_EQ(p.SerializeCharts(), snapshot);
}

TEST(EarleyParser, ScannableItems) {
  EarleyParser p(Compile(R"(root ::= "ab")"));
  auto scannable = p.ScannableItems();
  ASSERT_EQ(scannable.size(), 1u);
  EXPECT_EQ(p.grammar().rule(scannable[0].rule).name, "root");

  EarleyParser q(Compile("root ::= sub \"x\"\nsub ::= \"y\""));
  scannable = q.ScannableItems();
  ASSERT_EQ(scannable.size(), 1u);
  EXPECT_EQ(q.grammar().rule(scannable[0].rule).name, "sub");
  // Every scannable item's dot has a terminal edge, so items whose dot only has references are out.
  for (const auto& item : q.CurrentItems()) {
    const bool has_terminal = !q.grammar().state(item.rule, item.state).terminals.empty();
    const bool listed = std::find(scannable.begin(), scannable.end(), item) != scannable.end();
    EXPECT_EQ(has_terminal, listed);
  }
}

TEST(EarleyParser, CountedRepetition) {
  auto g = Compile(R"(root ::= "x"{10,20} "y")");
  for (int n = 0; n <= 22; ++n) {
    EarleyParser p(g);
    const bool ok = p.AdvanceBytes(std::string(n, 'x') + "y");
    EXPECT_EQ(ok && p.CanTerminate(), n >= 10 && n <= 20) << n;
  }
}

TEST(EarleyParser, LocalRootCompletion) {
  auto g = Compile("root ::= a \"c\"\na ::= \"ab\"");
  int32_t a = -1;
  for (int32_t r = 0; r < g->num_rules(); ++r) {
    if (g->rule(r).name == "a") a = r;
  }
  EarleyParser local(g, {a, g->rule(a).fsm.initial(), -1});
  EXPECT_FALSE(local.RootCompleted());
  EXPECT_TRUE(local.AdvanceBytes("ab"));
  EXPECT_TRUE(local.RootCompleted());
  EXPECT_FALSE(local.Advance('c'));
}

TEST(EarleyParser, AgreesWithReferenceOnCorpusSamples) {
  std::mt19937_64 rng(4);
  for (const auto& c : testing::Corpus()) {
    auto g = CompiledGrammar::Compile(c.grammar);
    ReferenceRecognizer ref(c.grammar);
    for (int i = 0; i < 20; ++i) {
      const std::string text = c.sample(rng);
      EarleyParser p(g);
      ASSERT_TRUE(p.AdvanceBytes(text)) << c.name << " " << text;
      ASSERT_TRUE(p.CanTerminate()) << c.name << " " << text;
      ASSERT_TRUE(ref.Accepts(text)) << c.name << " " << text;
    }
  }
}

}  // namespace
}  // namespace gramdash
