/*!
 *  Copyright (c) 2026 by Contributors
 * \file property_test.cc
 * \brief Randomized properties over generated grammars.
 */
#include <gtest/gtest.h>

#include <random>

#include "corpus.h"
#include "gramdash/earley.h"
#include "gramdash/oracle.h"

namespace gramdash {
namespace {

/*! \brief Random EBNF over bytes {a, b, c}; rule i is named prefix + i, rule 0 becomes root. */
class GrammarGen {
 public:
  explicit GrammarGen(uint64_t seed) : rng_(seed) {}

  std::string Generate(const std::string& prefix) {
    std::mt19937_64 saved = rng_;
    const int rules = 1 + Pick(3);
    std::string text;
    for (int r = 0; r < rules; ++r) {
      text += Name(prefix, r) + " ::= " + Expr(prefix, rules, 3) + "\n";
    }
    rng_ = saved;
    Pick(1u << 30);
    return text;
  }

 private:
  int Pick(uint32_t n) { return static_cast<int>(rng_() % n); }

  static std::string Name(const std::string& prefix, int r) {
    return r == 0 ? "root" : prefix + std::to_string(r);
  }

  std::string Atom(const std::string& prefix, int rules, int depth) {
    switch (Pick(depth > 0 ? 6 : 3)) {
      case 0: {
        std::string s;
        for (int n = 1 + Pick(3); n > 0; --n) s += static_cast<char>('a' + Pick(3));
        return "\"" + s + "\"";
      }
      case 1:
        return Pick(2) ? "[ab]" : "[^a]";
      case 2:
        return rules > 1 && Pick(2) ? Name(prefix, 1 + Pick(rules - 1)) : "\"c\"";
      case 3:
        return Name(prefix, Pick(rules));
      default:
        return "(" + Expr(prefix, rules, depth - 1) + ")";
    }
  }

  std::string Item(const std::string& prefix, int rules, int depth) {
    std::string a = Atom(prefix, rules, depth);
    switch (Pick(8)) {
      case 0: return a + "*";
      case 1: return a + "+";
      case 2: return a + "?";
      case 3: {
        const int lo = Pick(4), hi = lo + Pick(8);
        return a + "{" + std::to_string(lo) + "," + std::to_string(hi) + "}";
      }
      default: return a;
    }
  }

  std::string Expr(const std::string& prefix, int rules, int depth) {
    std::string out;
    for (int alt = 1 + Pick(2); alt > 0; --alt) {
      if (!out.empty()) out += " | ";
      for (int n = 1 + Pick(3); n > 0; --n) out += Item(prefix, rules, depth) + " ";
      out.pop_back();
    }
    return out;
  }

  std::mt19937_64 rng_;
};

/*! \brief Every string of length 1..3 over {a, b, c}, plus EOS. */
std::shared_ptr<const Vocabulary> SmallVocab() {
  std::vector<std::string> tokens = testing::AllStrings("abc", 3);
  tokens.erase(tokens.begin());
  tokens.push_back("");
  const int32_t eos = static_cast<int32_t>(tokens.size()) - 1;
  return std::make_shared<const Vocabulary>(tokens, eos);
}

/*! \brief Generated grammars that parse and validate; degenerate ones are skipped. */
std::vector<std::pair<std::string, Grammar>> ValidGrammars(int count, uint64_t seed) {
  GrammarGen gen(seed);
  std::vector<std::pair<std::string, Grammar>> out;
  while (static_cast<int>(out.size()) < count) {
    const std::string text = gen.Generate("r");
    try {
      Grammar g = ParseEbnf(text);
      ThrowIfInvalid(g);
      out.emplace_back(text, std::move(g));
    } catch (const Error&) {
    }
  }
  return out;
}

TEST(Property, EngineMatchesOracleOnRandomGrammars) {
  auto vocab = SmallVocab();
  int steps = 0;
  for (const auto& [text, g] : ValidGrammars(150, 1)) {
    for (uint64_t seed : {1, 2}) {
      OracleReport r = DiffTrace(g, vocab, 12, seed);
      ASSERT_TRUE(r.agreed) << text << "seed " << seed << " text " << r.text;
      steps += static_cast<int>(r.steps.size());
    }
  }
  EXPECT_GT(steps, 300);
}

TEST(Property, MasksInvariantUnderConfiguration) {
  auto vocab = SmallVocab();
  for (const auto& [text, g] : ValidGrammars(60, 2)) {
    std::vector<std::string> walks;
    for (int config = 0; config < 6; ++config) {
      DiffOptions options;
      options.compile.repetition_threshold = config % 3 == 0 ? 2 : 8;
      options.compile.compress_repetitions = config % 3 != 2;
      options.jit = config < 3 ? JitConfig{false, 0} : JitConfig{true, 4};
      OracleReport r = DiffTrace(g, vocab, 10, 5, options);
      ASSERT_TRUE(r.agreed) << text << "config " << config;
      std::string walk;
      for (const auto& s : r.steps) walk += s.mask.Serialize() + ";";
      walks.push_back(walk);
    }
    for (const auto& w : walks) EXPECT_EQ(w, walks[0]) << text;
  }
}

TEST(Property, EngineRecognizesSameLanguage) {
  const auto strings = testing::AllStrings("abc", 5);
  for (const auto& [text, g] : ValidGrammars(80, 3)) {
    auto compiled = CompiledGrammar::Compile(g);
    ReferenceRecognizer ref(g);
    for (const auto& s : strings) {
      EarleyParser p(compiled);
      const bool engine = p.AdvanceBytes(s) && p.CanTerminate();
      ASSERT_EQ(engine, ref.Accepts(s)) << text << "input '" << s << "'";
    }
  }
}

TEST(Property, RollbackRestoresCharts) {
  std::mt19937_64 rng(4);
  for (const auto& [text, g] : ValidGrammars(60, 4)) {
    EarleyParser p(CompiledGrammar::Compile(g));
    std::vector<std::string> snapshots = {p.SerializeCharts()};
    for (int i = 0; i < 12; ++i) {
      if (p.Advance(static_cast<uint8_t>('a' + rng() % 3))) snapshots.push_back(p.SerializeCharts());
    }
    while (!snapshots.empty()) {
      const int32_t mark = static_cast<int32_t>(rng() % snapshots.size());
      p.Rollback(mark);
      ASSERT_EQ(p.SerializeCharts(), snapshots[mark]) << text;
      snapshots.resize(mark);
    }
  }
}

TEST(Property, PrintParseRoundTrip) {
  for (const auto& [text, g] : ValidGrammars(200, 5)) {
    Grammar again = ParseEbnf(g.ToString());
    EXPECT_TRUE(StructurallyEqual(g, again)) << text << "\n" << g.ToString();
    EXPECT_EQ(again.ToString(), g.ToString());
  }
}

TEST(Property, RootHashIgnoresRuleNames) {
  int stable = 0;
  for (uint64_t seed = 0; seed < 400; ++seed) {
    GrammarGen a(seed), b(seed);
    const std::string left = a.Generate("r"), right = b.Generate("other_");
    Grammar gl, gr;
    try {
      gl = ParseEbnf(left);
      gr = ParseEbnf(right);
      ThrowIfInvalid(gl);
    } catch (const Error&) {
      continue;
    }
    auto cl = CompiledGrammar::Compile(gl), cr = CompiledGrammar::Compile(gr);
    auto root_hash = [](const CompiledGrammar& c) {
      for (const auto& r : c.rules()) {
        if (r.name == "root") return r.hash;
      }
      return uint64_t{0};
    };
    // Rules in non-simple cycles get a fresh hash per build; only stable hashes are comparable.
    if (root_hash(*CompiledGrammar::Compile(gl)) != root_hash(*cl)) continue;
    ++stable;
    EXPECT_EQ(root_hash(*cl), root_hash(*cr)) << left << "---\n" << right;
  }
  EXPECT_GT(stable, 30);
}

TEST(Property, CompressionPreservesLanguage) {
  const auto strings = testing::AllStrings("abc", 5);
  for (const auto& [text, g] : ValidGrammars(80, 6)) {
    ReferenceRecognizer plain(g), compressed(CompressRepetitions(g, 2));
    for (const auto& s : strings) {
      ASSERT_EQ(plain.Accepts(s), compressed.Accepts(s)) << text << "input '" << s << "'";
    }
  }
}

}  // namespace
}  // namespace gramdash
