/*!
 *  Copyright (c) 2026 by Contributors
 * \file fsm_test.cc
 */
#include <gtest/gtest.h>

#include <random>

#include "corpus.h"
#include "gramdash/compiled_grammar.h"
#include "gramdash/fsm.h"

namespace gramdash {
namespace {

int32_t NoRefs(std::string_view) { return -1; }

int32_t CountTerminalEdges(const Fsm& fsm) {
  int32_t n = 0;
  for (int32_t s = 0; s < fsm.num_states(); ++s) {
    for (const auto& e : fsm.edges(s)) n += e.IsTerminal();
  }
  return n;
}

std::vector<int32_t> Symbols(std::string_view s) { return {s.begin(), s.end()}; }

Fsm Chain(const std::vector<int32_t>& ids, const std::string& bytes) {
  // States ids[0] -> ids[1] -> ... labelled by bytes; the last is final.
  Fsm fsm;
  for (size_t i = 0; i < ids.size(); ++i) fsm.AddState();
  for (size_t i = 0; i + 1 < ids.size(); ++i) {
    const auto b = static_cast<uint8_t>(bytes[i]);
    fsm.AddEdge(ids[i], FsmEdge::Terminal(b, b, ids[i + 1]));
  }
  fsm.set_initial(ids.front());
  fsm.SetFinal(ids.back());
  return fsm;
}

TEST(BuildFsm, LiteralChain) {
  Fsm fsm = Determinize(BuildFsm(*RuleExpr::Bytes("ab"), NoRefs)).fsm;
  EXPECT_EQ(fsm.num_states(), 3);
  EXPECT_EQ(CountTerminalEdges(fsm), 2);
  EXPECT_TRUE(fsm.AcceptsSymbols(Symbols("ab")));
  EXPECT_FALSE(fsm.AcceptsSymbols(Symbols("a")));
}

TEST(BuildFsm, CharClass) {
  Fsm fsm = BuildFsm(*RuleExpr::CharClass({{'a', 'c'}}), NoRefs);
  EXPECT_EQ(fsm.num_states(), 2);
  ASSERT_EQ(fsm.edges(fsm.initial()).size(), 1u);
  EXPECT_EQ(fsm.edges(fsm.initial())[0], FsmEdge::Terminal('a', 'c', fsm.edges(fsm.initial())[0].target));
}

TEST(BuildFsm, ChoiceSharesStart) {
  Fsm fsm = BuildFsm(*RuleExpr::Choice({RuleExpr::Bytes("a"), RuleExpr::Bytes("ab")}), NoRefs);
  EXPECT_TRUE(fsm.AcceptsSymbols(Symbols("a")));
  EXPECT_TRUE(fsm.AcceptsSymbols(Symbols("ab")));
  EXPECT_FALSE(fsm.AcceptsSymbols(Symbols("b")));
  EXPECT_FALSE(fsm.IsDeterministic());
}

TEST(BuildFsm, RuleRefSymbols) {
  auto resolve = [](std::string_view name) { return name == "x" ? 0 : 1; };
  Fsm fsm = BuildFsm(*RuleExpr::Sequence({RuleExpr::Ref("y"), RuleExpr::Bytes("a")}), resolve);
  EXPECT_TRUE(fsm.AcceptsSymbols(std::vector<int32_t>{256 + 1, 'a'}));
  EXPECT_FALSE(fsm.AcceptsSymbols(std::vector<int32_t>{256 + 0, 'a'}));
}

TEST(Determinize, AOrAbHasThreeStates) {
  Fsm nfa = BuildFsm(*RuleExpr::Choice({RuleExpr::Bytes("a"), RuleExpr::Bytes("ab")}), NoRefs);
  auto result = Determinize(nfa);
  ASSERT_FALSE(result.blowup);
  const Fsm& dfa = result.fsm;
  EXPECT_TRUE(dfa.IsDeterministic());
  EXPECT_EQ(dfa.num_states(), 3);
  const int32_t start = dfa.initial();
  ASSERT_EQ(dfa.edges(start).size(), 1u);
  const FsmEdge a = dfa.edges(start)[0];
  EXPECT_EQ(a.lower, 'a');
  EXPECT_TRUE(dfa.IsFinal(a.target));
  ASSERT_EQ(dfa.edges(a.target).size(), 1u);
  const FsmEdge b = dfa.edges(a.target)[0];
  EXPECT_EQ(b.lower, 'b');
  EXPECT_TRUE(dfa.IsFinal(b.target));
  EXPECT_FALSE(dfa.IsFinal(start));
}

TEST(Determinize, DeterministicChainIsFixpoint) {
  Fsm chain = Chain({0, 1, 2}, "ab");
  EXPECT_EQ(Determinize(chain).fsm, chain);
}

TEST(Determinize, RefOnlyFsmUnchanged) {
  Fsm fsm;
  fsm.AddState();
  fsm.AddState();
  fsm.AddEdge(0, FsmEdge::RuleRef(3, 1));
  fsm.SetFinal(1);
  EXPECT_EQ(Determinize(fsm).fsm, fsm);
}

TEST(Determinize, BlowupReturnsInputWithFlag) {
  // (a|b)* a (a|b){11}: the minimal DFA needs 2^12 states.
  auto ab = RuleExpr::CharClass({{'a', 'b'}});
  Fsm nfa = BuildFsm(*RuleExpr::Sequence({RuleExpr::Repeat(ab, 0, kUnbounded), RuleExpr::Bytes("a"),
                                          ExpandRepetition(ab, 11, 11)}),
                     NoRefs);
  auto result = Determinize(nfa, 256);
  EXPECT_TRUE(result.blowup);
  EXPECT_EQ(result.fsm, nfa);
}

TEST(Determinize, PreservesLanguage) {
  std::mt19937_64 rng(5);
  const auto strings = testing::AllStrings("abc", 8);
  auto leaf = [&]() -> ExprPtr {
    switch (rng() % 3) {
      case 0:
        return RuleExpr::Bytes(std::string(1, static_cast<char>('a' + rng() % 3)));
      case 1:
        return RuleExpr::Bytes("ab");
      default:
        return RuleExpr::CharClass({{'b', 'c'}});
    }
  };
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<ExprPtr> alts;
    for (int i = 0; i < 3; ++i) {
      ExprPtr x = leaf();
      if (rng() % 2) x = RuleExpr::Repeat(x, 0, kUnbounded);
      alts.push_back(RuleExpr::Sequence({x, leaf()}));
    }
    ExprPtr expr = rng() % 2 ? RuleExpr::Choice(alts) : RuleExpr::Sequence({alts[0], RuleExpr::Choice({alts[1], alts[2]})});
    Fsm nfa = BuildFsm(*expr, NoRefs);
    Fsm dfa = Determinize(nfa).fsm;
    ASSERT_TRUE(dfa.IsDeterministic());
    for (const auto& s : strings) {
      ASSERT_EQ(nfa.AcceptsSymbols(Symbols(s)), dfa.AcceptsSymbols(Symbols(s))) << PrintExpr(*expr) << " " << s;
    }
  }
}

TEST(HashFsm, PermutedNumberingSameHash) {
  Fsm a = Chain({0, 1, 2}, "ab");
  Fsm b = Chain({2, 0, 1}, "ab");
  ASSERT_NE(a, b);
  EXPECT_EQ(HashFsm(a, {}), HashFsm(b, {}));
  EXPECT_EQ(Canonicalize(a, {}), Canonicalize(b, {}));
}

TEST(HashFsm, DifferentLabelsDiffer) {
  EXPECT_NE(HashFsm(Chain({0, 1, 2}, "ab"), {}), HashFsm(Chain({0, 1, 2}, "ac"), {}));
}

TEST(HashFsm, ReferencedHashesMatter) {
  Fsm fsm;
  fsm.AddState();
  fsm.AddState();
  fsm.AddEdge(0, FsmEdge::RuleRef(0, 1));
  fsm.SetFinal(1);
  Fsm other = fsm;
  other.mutable_edges(0)[0].rule = 1;
  const std::vector<std::optional<uint64_t>> env = {11, 22};
  EXPECT_NE(HashFsm(fsm, env), HashFsm(other, env));
  const std::vector<std::optional<uint64_t>> same = {11, 11};
  EXPECT_EQ(HashFsm(fsm, same), HashFsm(other, same));
}

TEST(HashFsm, UnhashedReferenceThrows) {
  Fsm fsm;
  fsm.AddState();
  fsm.AddState();
  fsm.AddEdge(0, FsmEdge::RuleRef(0, 1));
  const std::vector<std::optional<uint64_t>> env = {std::nullopt};
  try {
    HashFsm(fsm, env);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnhashedReference);
  }
}

TEST(HashFsm, FinalityMatters) {
  Fsm a = Chain({0, 1, 2}, "ab");
  Fsm b = a;
  b.SetFinal(1);
  EXPECT_NE(HashFsm(a, {}), HashFsm(b, {}));
}

TEST(HashCycle, SingleElement) {
  const std::vector<uint64_t> local = {42};
  EXPECT_EQ(HashCycle(local), std::vector<uint64_t>{HashCombine(0, 42)});
}

TEST(HashCycle, TwoElementsNonCommutative) {
  const std::vector<uint64_t> local = {1, 2};
  auto out = HashCycle(local);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], HashCombine(HashCombine(0, 1), 2));
  EXPECT_EQ(out[1], HashCombine(HashCombine(0, 2), 1));
  EXPECT_NE(out[0], out[1]);
}

const CompiledRule& RuleNamed(const CompiledGrammar& g, const std::string& name) {
  for (const auto& r : g.rules()) {
    if (r.name == name) return r;
  }
  throw std::runtime_error("no rule " + name);
}

TEST(HashRules, RootDependsOnSub) {
  auto g1 = CompiledGrammar::Compile(ParseEbnf("root ::= \"a\" sub\nsub ::= \"b\""));
  auto g2 = CompiledGrammar::Compile(ParseEbnf("root ::= \"a\" sub\nsub ::= \"c\""));
  EXPECT_NE(RuleNamed(*g1, "root").hash, RuleNamed(*g2, "root").hash);
  auto g3 = CompiledGrammar::Compile(ParseEbnf("root ::= \"a\" other\nother ::= \"b\""));
  EXPECT_EQ(RuleNamed(*g1, "root").hash, RuleNamed(*g3, "root").hash);
}

TEST(HashRules, MutualRecursionSimpleCycle) {
  auto g = CompiledGrammar::Compile(ParseEbnf("root ::= A\nA ::= \"a\" B?\nB ::= \"b\" A?"));
  const uint64_t a = RuleNamed(*g, "A").hash, b = RuleNamed(*g, "B").hash;
  EXPECT_NE(a, b);
  // Deterministic across compilations: simple cycles do not fall back to fresh hashes.
  auto again = CompiledGrammar::Compile(ParseEbnf("root ::= A\nA ::= \"a\" B?\nB ::= \"b\" A?"));
  EXPECT_EQ(RuleNamed(*again, "A").hash, a);
  EXPECT_EQ(RuleNamed(*again, "B").hash, b);
}

TEST(HashRules, NonSimpleSccGetsFreshHashes) {
  const char* text = "root ::= A\nA ::= \"a\" A B | \"x\"\nB ::= \"b\" A";
  auto g1 = CompiledGrammar::Compile(ParseEbnf(text));
  auto g2 = CompiledGrammar::Compile(ParseEbnf(text));
  EXPECT_NE(RuleNamed(*g1, "A").hash, RuleNamed(*g2, "A").hash);
}

TEST(HashRules, DuplicatedSubgrammarsShareHash) {
  auto g = CompiledGrammar::Compile(ParseEbnf("root ::= a b\na ::= \"x\" [0-9]\nb ::= \"x\" [0-9]"));
  EXPECT_EQ(RuleNamed(*g, "a").hash, RuleNamed(*g, "b").hash);
  EXPECT_NE(RuleNamed(*g, "a").hash, RuleNamed(*g, "root").hash);
}

TEST(HashRules, SharedAcrossGrammars) {
  auto g1 = CompiledGrammar::Compile(ParseEbnf("root ::= \"<\" num \">\"\nnum ::= [0-9]+"));
  auto g2 = CompiledGrammar::Compile(ParseEbnf("root ::= num \",\" num\nnum ::= [0-9]+"));
  EXPECT_EQ(RuleNamed(*g1, "num").hash, RuleNamed(*g2, "num").hash);
}

TEST(Isomorphism, DetectsDifferences) {
  EXPECT_TRUE(IsIsomorphic(Chain({0, 1, 2}, "ab"), Chain({1, 2, 0}, "ab"), {}));
  EXPECT_FALSE(IsIsomorphic(Chain({0, 1, 2}, "ab"), Chain({0, 1, 2}, "ba"), {}));
}

TEST(CanonicalOrder, DropsUnreachable) {
  Fsm fsm = Chain({0, 1, 2}, "ab");
  fsm.AddState();
  EXPECT_EQ(CanonicalOrder(fsm, {}).size(), 3u);
  EXPECT_EQ(Canonicalize(fsm, {}).num_states(), 3);
}

}  // namespace
}  // namespace gramdash
