/*!
 *  Copyright (c) 2026 by Contributors
 * \file oracle.cc
 */
#include "gramdash/oracle.h"

#include <algorithm>
#include <map>
#include <random>
#include <unordered_set>

#include "gramdash/matcher.h"

namespace gramdash {

/****************** Desugaring ******************/

namespace {

class Desugarer {
 public:
  explicit Desugarer(const Grammar& grammar) : grammar_(grammar) {
    bnf_.num_nonterminals = grammar.num_rules();
  }

  Bnf Run() {
    for (int32_t r = 0; r < grammar_.num_rules(); ++r) {
      AddAlternatives(r, *grammar_.rule(r).body);
    }
    bnf_.start = NewNonterminal();
    Emit(bnf_.start, {grammar_.root_index()});
    bnf_.by_lhs.assign(bnf_.num_nonterminals, {});
    for (size_t p = 0; p < bnf_.productions.size(); ++p) {
      bnf_.by_lhs[bnf_.productions[p].lhs].push_back(static_cast<int32_t>(p));
    }
    ComputeNullable();
    return std::move(bnf_);
  }

 private:
  int32_t NewNonterminal() { return bnf_.num_nonterminals++; }

  void Emit(int32_t lhs, std::vector<int32_t> rhs) { bnf_.productions.push_back({lhs, std::move(rhs)}); }

  int32_t Terminal(const std::bitset<256>& set) {
    auto [it, fresh] = terminal_ids_.try_emplace(set.to_string(), 0);
    if (fresh) {
      it->second = -static_cast<int32_t>(bnf_.terminals.size()) - 1;
      bnf_.terminals.push_back(set);
    }
    return it->second;
  }

  int32_t Byte(uint8_t b) {
    std::bitset<256> set;
    set.set(b);
    return Terminal(set);
  }

  // A top-level choice becomes several productions of the rule itself.
  void AddAlternatives(int32_t lhs, const RuleExpr& expr) {
    if (expr.kind == ExprKind::kChoice) {
      for (const auto& alt : expr.children) AddAlternatives(lhs, *alt);
      return;
    }
    std::vector<int32_t> rhs;
    Append(expr, &rhs);
    Emit(lhs, std::move(rhs));
  }

  int32_t Wrap(const RuleExpr& expr) {
    int32_t nt = NewNonterminal();
    AddAlternatives(nt, expr);
    return nt;
  }

  void Append(const RuleExpr& expr, std::vector<int32_t>* out) {
    switch (expr.kind) {
      case ExprKind::kEmpty:
        return;
      case ExprKind::kBytes:
        for (char c : expr.bytes) out->push_back(Byte(static_cast<uint8_t>(c)));
        return;
      case ExprKind::kCharClass: {
        std::bitset<256> set;
        for (int b = 0; b < 256; ++b) {
          bool in = false;
          for (const auto& r : expr.ranges) in |= r.lower <= b && b <= r.upper;
          set[b] = in != expr.negated;
        }
        out->push_back(Terminal(set));
        return;
      }
      case ExprKind::kSequence:
        for (const auto& child : expr.children) Append(*child, out);
        return;
      case ExprKind::kChoice:
        out->push_back(Wrap(expr));
        return;
      case ExprKind::kRuleRef: {
        auto index = grammar_.FindRule(expr.bytes);
        if (!index) throw Error(ErrorKind::kUnknownRule, expr.bytes);
        out->push_back(*index);
        return;
      }
      case ExprKind::kRepetition: {
        // exact_j ::= exact_{j-1} body, kept left-recursive so that long repetitions stay linear.
        const int32_t body = Wrap(*expr.body());
        const int64_t top = expr.max == kUnbounded ? expr.min : expr.max;
        std::vector<int32_t> exact{NewNonterminal()};
        Emit(exact[0], {});
        for (int64_t j = 1; j <= top; ++j) {
          exact.push_back(NewNonterminal());
          Emit(exact[j], {exact[j - 1], body});
        }
        if (expr.max == kUnbounded) {
          // more ::= "" | more body
          int32_t more = NewNonterminal();
          Emit(more, {});
          Emit(more, {more, body});
          out->push_back(exact[expr.min]);
          out->push_back(more);
        } else {
          int32_t any = NewNonterminal();
          for (int64_t j = expr.min; j <= expr.max; ++j) Emit(any, {exact[j]});
          out->push_back(any);
        }
        return;
      }
      case ExprKind::kTagDispatch:
        out->push_back(Dispatch(expr.dispatch));
        return;
    }
  }

  // Free text over states named by the pending text, which is always a proper prefix of some
  // pattern that contains no complete pattern. On each byte the longest pattern ending there
  // fires; otherwise the state becomes the longest suffix that is still a pattern prefix.
  // text_q derives the texts that leave the construct in state q (left-recursive).
  int32_t Dispatch(const TagDispatchSpec& spec) {
    std::vector<std::string> patterns;
    for (const auto& [tag, rule] : spec.pairs) patterns.push_back(tag);
    for (const auto& stop : spec.stop_strs) patterns.push_back(stop);
    const auto num_tags = static_cast<int32_t>(spec.pairs.size());
    std::vector<int32_t> tag_rules;
    for (const auto& [tag, rule] : spec.pairs) {
      auto index = grammar_.FindRule(rule);
      if (!index) throw Error(ErrorKind::kUnknownRule, rule);
      tag_rules.push_back(*index);
    }
    auto is_prefix = [&](std::string_view s) {
      return std::any_of(patterns.begin(), patterns.end(),
                         [&](const std::string& p) { return p.size() > s.size() && p.starts_with(s); });
    };
    const int32_t whole = NewNonterminal();
    std::map<std::string, int32_t> text_nt;
    std::vector<std::string> pending{""};
    text_nt[""] = NewNonterminal();
    const int32_t initial = text_nt[""];
    Emit(initial, {});
    for (size_t i = 0; i < pending.size(); ++i) {
      const std::string p = pending[i];
      const int32_t from = text_nt[p];
      if (spec.stop_strs.empty()) Emit(whole, {from});
      std::map<std::pair<int32_t, int32_t>, std::bitset<256>> grouped;  // (kind, target) -> bytes
      for (int b = 0; b < 256; ++b) {
        std::string s = p + static_cast<char>(b);
        int32_t fired = -1;
        for (int32_t k = 0; k < static_cast<int32_t>(patterns.size()); ++k) {
          if (s.ends_with(patterns[k]) &&
              (fired < 0 || patterns[k].size() > patterns[fired].size())) {
            fired = k;
          }
        }
        if (fired >= num_tags) {
          grouped[{0, 0}].set(b);
        } else if (fired >= 0) {
          grouped[{1, fired}].set(b);
        } else {
          std::string q = s;
          while (!q.empty() && !is_prefix(q)) q.erase(0, 1);
          auto [it, fresh] = text_nt.try_emplace(q, 0);
          if (fresh) {
            it->second = NewNonterminal();
            pending.push_back(q);
          }
          grouped[{2, it->second}].set(b);
        }
      }
      for (const auto& [what, bytes] : grouped) {
        const int32_t t = Terminal(bytes);
        switch (what.first) {
          case 0:
            Emit(whole, {from, t});
            break;
          case 1:
            Emit(spec.loop_after_dispatch ? initial : whole, {from, t, tag_rules[what.second]});
            break;
          default:
            Emit(what.second, {from, t});
        }
      }
    }
    return whole;
  }

  void ComputeNullable() {
    bnf_.nullable.assign(bnf_.num_nonterminals, false);
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& prod : bnf_.productions) {
        if (bnf_.nullable[prod.lhs]) continue;
        bool all = std::all_of(prod.rhs.begin(), prod.rhs.end(),
                               [&](int32_t s) { return s >= 0 && bnf_.nullable[s]; });
        if (all) {
          bnf_.nullable[prod.lhs] = true;
          changed = true;
        }
      }
    }
  }

  const Grammar& grammar_;
  Bnf bnf_;
  std::map<std::string, int32_t> terminal_ids_;
};

}  // namespace

Bnf Bnf::FromGrammar(const Grammar& grammar) { return Desugarer(grammar).Run(); }

/****************** Recognizer ******************/

ReferenceRecognizer::ReferenceRecognizer(const Grammar& grammar) : bnf_(Bnf::FromGrammar(grammar)) {
  int32_t offset = 0;
  for (const auto& prod : bnf_.productions) {
    prod_offset_.push_back(offset);
    offset += static_cast<int32_t>(prod.rhs.size()) + 1;
  }
  Reset();
}

void ReferenceRecognizer::Add(std::vector<Item>& set, std::vector<uint64_t>& keys, const Item& item) {
  uint64_t key = (static_cast<uint64_t>(prod_offset_[item.prod] + item.dot) << 32) |
                 static_cast<uint32_t>(item.origin);
  auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it != keys.end() && *it == key) return;
  keys.insert(it, key);
  set.push_back(item);
}

void ReferenceRecognizer::Close(int32_t index) {
  auto& set = sets_[index];
  auto& keys = keys_[index];
  for (size_t i = 0; i < set.size(); ++i) {
    const Item item = set[i];
    const auto& rhs = bnf_.productions[item.prod].rhs;
    if (item.dot == static_cast<int32_t>(rhs.size())) {
      // Empty completions were already applied at prediction time.
      if (item.origin == index) continue;
      const int32_t lhs = bnf_.productions[item.prod].lhs;
      const auto& from = sets_[item.origin];
      const auto& waiting = waiting_[item.origin];
      auto lo = std::lower_bound(waiting.begin(), waiting.end(), std::make_pair(lhs, 0));
      for (auto it = lo; it != waiting.end() && it->first == lhs; ++it) {
        const Item& w = from[it->second];
        Add(set, keys, {w.prod, w.dot + 1, w.origin});
      }
      continue;
    }
    const int32_t next = rhs[item.dot];
    if (next < 0) continue;
    for (int32_t prod : bnf_.by_lhs[next]) Add(set, keys, {prod, 0, index});
    if (bnf_.nullable[next]) Add(set, keys, {item.prod, item.dot + 1, item.origin});
  }
  std::vector<std::pair<int32_t, int32_t>> waiting;
  for (size_t i = 0; i < set.size(); ++i) {
    const auto& rhs = bnf_.productions[set[i].prod].rhs;
    if (set[i].dot < static_cast<int32_t>(rhs.size()) && rhs[set[i].dot] >= 0) {
      waiting.emplace_back(rhs[set[i].dot], static_cast<int32_t>(i));
    }
  }
  std::sort(waiting.begin(), waiting.end());
  waiting_[index] = std::move(waiting);
}

void ReferenceRecognizer::Reset() {
  sets_.assign(1, {});
  keys_.assign(1, {});
  waiting_.assign(1, {});
  for (int32_t prod : bnf_.by_lhs[bnf_.start]) Add(sets_[0], keys_[0], {prod, 0, 0});
  Close(0);
}

bool ReferenceRecognizer::Feed(uint8_t byte) {
  const auto index = static_cast<int32_t>(sets_.size());
  std::vector<Item> next;
  std::vector<uint64_t> keys;
  for (const Item& item : sets_.back()) {
    const auto& rhs = bnf_.productions[item.prod].rhs;
    if (item.dot < static_cast<int32_t>(rhs.size()) && rhs[item.dot] < 0 &&
        bnf_.terminals[-rhs[item.dot] - 1][byte]) {
      Add(next, keys, {item.prod, item.dot + 1, item.origin});
    }
  }
  if (next.empty()) return false;
  sets_.push_back(std::move(next));
  keys_.push_back(std::move(keys));
  waiting_.emplace_back();
  Close(index);
  return true;
}

void ReferenceRecognizer::Truncate(int32_t length) {
  if (length < this->length()) {
    sets_.resize(length + 1);
    keys_.resize(length + 1);
    waiting_.resize(length + 1);
  }
}

bool ReferenceRecognizer::Complete() const {
  return std::any_of(sets_.back().begin(), sets_.back().end(), [&](const Item& item) {
    const auto& prod = bnf_.productions[item.prod];
    return prod.lhs == bnf_.start && item.origin == 0 &&
           item.dot == static_cast<int32_t>(prod.rhs.size());
  });
}

bool ReferenceRecognizer::AcceptsPrefix(std::string_view text) {
  Reset();
  for (char c : text) {
    if (!Feed(static_cast<uint8_t>(c))) return false;
  }
  return true;
}

bool ReferenceRecognizer::Accepts(std::string_view text) { return AcceptsPrefix(text) && Complete(); }

/****************** Masks ******************/

TokenMask Oracle::Mask(std::string_view prefix, const Vocabulary& vocab) {
  if (!recognizer_.AcceptsPrefix(prefix)) {
    throw Error(ErrorKind::kInvalidPrefix, "prefix is not viable: " + QuoteBytes(prefix));
  }
  const int32_t base = recognizer_.length();
  TokenMask mask(vocab.size(), false);
  if (recognizer_.Complete()) mask.Set(vocab.eos_id());
  const auto& ids = vocab.sorted_ids();
  const auto& lcp = vocab.sorted_lcp();
  bool previous_failed = false;
  for (size_t i = 0; i < ids.size(); ++i) {
    const std::string& token = vocab.token(ids[i]);
    const int32_t reached = recognizer_.length() - base;
    bool failed = previous_failed && lcp[i] > reached;
    if (!failed) {
      recognizer_.Truncate(base + std::min(lcp[i], reached));
      for (size_t p = recognizer_.length() - base; p < token.size(); ++p) {
        if (!recognizer_.Feed(static_cast<uint8_t>(token[p]))) {
          failed = true;
          break;
        }
      }
    }
    if (!failed) mask.Set(ids[i]);
    previous_failed = failed;
  }
  return mask;
}

TokenMask OracleMask(const Grammar& grammar, std::string_view prefix, const Vocabulary& vocab) {
  return Oracle(grammar).Mask(prefix, vocab);
}

OracleReport DiffTrace(const Grammar& grammar, std::shared_ptr<const Vocabulary> vocab,
                       int32_t steps, uint64_t seed, const DiffOptions& options) {
  auto compiled = CompiledGrammar::Compile(grammar, options.compile);
  auto pool = options.pool ? options.pool : std::make_shared<CachePool>();
  JitPrecompile(compiled, *vocab, *pool, options.jit);
  GrammarMatcher matcher(compiled, vocab, pool);
  Oracle oracle(grammar);
  std::mt19937_64 rng(seed);
  OracleReport report;
  bool following = !options.guide.empty();
  for (int32_t step = 0; step < steps && !matcher.IsTerminated(); ++step) {
    if (options.before_mask) options.before_mask(matcher);
    TokenMask engine = matcher.GenerateMask();
    OracleStep record;
    record.position = static_cast<int32_t>(report.text.size());
    record.mask = oracle.Mask(report.text, *vocab);
    for (int32_t id = 0; id < vocab->size(); ++id) {
      if (engine.Test(id) != record.mask.Test(id)) record.mismatches.push_back(id);
    }
    report.agreed &= record.mismatches.empty();
    const std::vector<int32_t> allowed = record.mask.AllowedIds();
    const bool record_eos = record.mask.Test(vocab->eos_id());
    report.steps.push_back(std::move(record));
    if (allowed.empty()) break;
    int32_t id = allowed[rng() % allowed.size()];
    if (following && rng() % 10 != 0) {
      const std::string_view rest = std::string_view(options.guide).substr(report.text.size());
      size_t best = 0;
      for (int32_t candidate : allowed) {
        const std::string& token = vocab->token(candidate);
        if (candidate != vocab->eos_id() && token.size() > best && rest.starts_with(token)) {
          best = token.size();
          id = candidate;
        }
      }
      if (best == 0 && rest.empty() && record_eos) id = vocab->eos_id();
    }
    if (!matcher.AcceptToken(id)) {
      report.agreed = false;
      break;
    }
    report.tokens.push_back(id);
    if (id != vocab->eos_id()) report.text += vocab->token(id);
    following = following && std::string_view(options.guide).starts_with(report.text);
  }
  return report;
}

}  // namespace gramdash
