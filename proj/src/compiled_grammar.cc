/*!
 *  Copyright (c) 2026 by Contributors
 * \file compiled_grammar.cc
 */
#include "gramdash/compiled_grammar.h"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "gramdash/dispatch.h"

namespace gramdash {

const char* RuleKindName(RuleKind kind) {
  switch (kind) {
    case RuleKind::kNormal:
      return "normal";
    case RuleKind::kRepeat:
      return "repeat";
    case RuleKind::kDispatch:
      return "dispatch";
    case RuleKind::kStart:
      return "start";
  }
  return "?";
}

bool Lookahead::Admits(std::string_view suffix) const {
  if (unconstrained || suffix.empty()) return true;
  const auto first = static_cast<uint8_t>(suffix[0]);
  for (const auto& [a, b] : pairs) {
    if (!a.Test(first)) continue;
    if (suffix.size() == 1 || b.Test(static_cast<uint8_t>(suffix[1]))) return true;
  }
  return false;
}

void Lookahead::ComputeHash() {
  uint64_t h = HashCombine(0x6c6f6f6b61686561ULL, unconstrained ? 1 : 0, pairs.size());
  for (const auto& [a, b] : pairs) {
    for (uint64_t w : a.words) h = HashCombine(h, w);
    for (uint64_t w : b.words) h = HashCombine(h, w);
  }
  hash = h;
}

/****************** Lowering ******************/

namespace {

constexpr const char* kStartName = "$start";

struct LoweredRule {
  std::string name;
  RuleKind kind;
  ExprPtr body;
  int64_t rep_min = 0;
  int64_t rep_max = kUnbounded;
  int32_t rep_window = 0;
};

// Moves every compressed repetition tail into a counting rule of its own.
class TailLifter {
 public:
  explicit TailLifter(std::vector<LoweredRule>* out) : out_(out) {}

  ExprPtr Lift(const ExprPtr& expr, const std::string& owner) {
    const RuleExpr& e = *expr;
    if (e.IsCompressedTail()) {
      std::string name = owner + "__rep" + std::to_string(counter_[owner]++);
      ExprPtr body = Lift(e.body(), owner);
      out_->push_back({name, RuleKind::kRepeat, body, e.min, e.max, e.compressed_threshold + 1});
      return RuleExpr::Ref(name);
    }
    if (e.children.empty()) return expr;
    std::vector<ExprPtr> children;
    children.reserve(e.children.size());
    bool changed = false;
    for (const auto& c : e.children) {
      children.push_back(Lift(c, owner));
      changed = changed || children.back() != c;
    }
    if (!changed) return expr;
    switch (e.kind) {
      case ExprKind::kSequence:
        return RuleExpr::Sequence(std::move(children));
      case ExprKind::kChoice:
        return RuleExpr::Choice(std::move(children));
      case ExprKind::kRepetition:
        return RuleExpr::Repeat(children.front(), e.min, e.max);
      default:
        return expr;
    }
  }

 private:
  std::vector<LoweredRule>* out_;
  std::map<std::string, int> counter_;
};

uint64_t KindSalt(const LoweredRule& r) {
  switch (r.kind) {
    case RuleKind::kNormal:
      return 0;
    case RuleKind::kRepeat:
      return HashCombine(0x7265706561740000ULL, static_cast<uint64_t>(r.rep_min),
                         static_cast<uint64_t>(r.rep_max), static_cast<uint64_t>(r.rep_window));
    case RuleKind::kDispatch:
      return 0x6469737061746368ULL;
    case RuleKind::kStart:
      return 0x7374617274000000ULL;
  }
  return 0;
}

std::vector<StateInfo> SplitStates(const Fsm& fsm) {
  std::vector<StateInfo> states(fsm.num_states());
  for (int32_t s = 0; s < fsm.num_states(); ++s) {
    states[s].final = fsm.IsFinal(s);
    for (const auto& e : fsm.edges(s)) {
      if (e.IsTerminal()) {
        states[s].terminals.push_back(e);
      } else if (e.IsRuleRef()) {
        states[s].refs.push_back(e);
      } else {
        states[s].epsilons.push_back(e.target);
      }
    }
  }
  return states;
}

// Whether a final state is reachable from `s` without consuming bytes.
bool ReachesFinalFree(const CompiledRule& r, int32_t s, const std::vector<bool>& nullable) {
  std::vector<bool> seen(r.fsm.num_states(), false);
  std::vector<int32_t> stack{s};
  seen[s] = true;
  while (!stack.empty()) {
    int32_t u = stack.back();
    stack.pop_back();
    if (r.fsm.IsFinal(u)) return true;
    for (const auto& e : r.fsm.edges(u)) {
      bool free = e.IsEpsilon() || (e.IsRuleRef() && nullable[e.rule]);
      if (free && !seen[e.target]) {
        seen[e.target] = true;
        stack.push_back(e.target);
      }
    }
  }
  return false;
}

std::vector<bool> RuleNullability(const std::vector<CompiledRule>& rules) {
  std::vector<bool> nullable(rules.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (size_t r = 0; r < rules.size(); ++r) {
      if (nullable[r]) continue;
      bool value = rules[r].kind == RuleKind::kRepeat
                       ? rules[r].rep_min == 0
                       : ReachesFinalFree(rules[r], rules[r].fsm.initial(), nullable);
      if (value) {
        nullable[r] = true;
        changed = true;
      }
    }
  }
  return nullable;
}

}  // namespace

/****************** Lookahead ******************/

namespace {

struct Site {
  int32_t rule;
  int32_t target;
};

constexpr size_t kMaxLookaheadPairs = 64;
constexpr size_t kLookaheadWalkBudget = 4096;

class LookaheadBuilder {
 public:
  explicit LookaheadBuilder(const std::vector<CompiledRule>& rules)
      : rules_(rules), n_(static_cast<int32_t>(rules.size())) {
    sites_.resize(n_);
    for (int32_t r = 0; r < n_; ++r) {
      const Fsm& fsm = rules_[r].fsm;
      for (int32_t s = 0; s < fsm.num_states(); ++s) {
        for (const auto& e : fsm.edges(s)) {
          if (e.IsRuleRef()) sites_[e.rule].push_back({r, e.target});
        }
      }
    }
    ComputeFirst();
    ComputeFollow();
  }

  Lookahead Build(int32_t rule) const {
    Lookahead la;
    if (rules_[rule].kind == RuleKind::kStart) {
      la.ComputeHash();
      return la;
    }
    // Terminal edges that can supply the first byte after the rule completes.
    std::map<ByteSet, ByteSet> by_second;
    std::vector<std::vector<bool>> visited(n_);
    for (int32_t r = 0; r < n_; ++r) visited[r].assign(rules_[r].fsm.num_states(), false);
    std::vector<std::pair<int32_t, int32_t>> stack;
    auto push = [&](int32_t r, int32_t s) {
      if (!visited[r][s]) {
        visited[r][s] = true;
        stack.emplace_back(r, s);
      }
    };
    auto push_after_final = [&](int32_t r) {
      if (rules_[r].kind == RuleKind::kRepeat) push(r, rules_[r].fsm.initial());
      for (const auto& site : sites_[r]) push(site.rule, site.target);
    };
    for (const auto& site : sites_[rule]) push(site.rule, site.target);
    size_t budget = 0;
    while (!stack.empty()) {
      if (++budget > kLookaheadWalkBudget) {
        la.unconstrained = true;
        la.pairs.clear();
        la.ComputeHash();
        return la;
      }
      auto [r, s] = stack.back();
      stack.pop_back();
      const Fsm& fsm = rules_[r].fsm;
      if (fsm.IsFinal(s)) push_after_final(r);
      for (const auto& e : fsm.edges(s)) {
        if (e.IsTerminal()) {
          ByteSet first;
          first.SetRange(e.lower, e.upper);
          by_second[SecondSet(r, e.target)].Merge(first);
        } else if (e.IsEpsilon()) {
          push(r, e.target);
        } else {
          push(e.rule, rules_[e.rule].fsm.initial());
          if (nullable_[e.rule]) push(r, e.target);
        }
      }
    }
    if (by_second.size() > kMaxLookaheadPairs) {
      ByteSet a, b;
      for (const auto& [second, first] : by_second) {
        a.Merge(first);
        b.Merge(second);
      }
      la.pairs.emplace_back(a, b);
    } else {
      for (const auto& [second, first] : by_second) la.pairs.emplace_back(first, second);
      std::sort(la.pairs.begin(), la.pairs.end());
    }
    la.ComputeHash();
    return la;
  }

 private:
  // First bytes from state s up to the end of the current body match, and whether that end is
  // reachable without bytes.
  void ComputeFirst() {
    nullable_ = RuleNullability(rules_);
    first_.resize(n_);
    reaches_final_.resize(n_);
    for (int32_t r = 0; r < n_; ++r) {
      first_[r].assign(rules_[r].fsm.num_states(), ByteSet{});
      reaches_final_[r].assign(rules_[r].fsm.num_states(), false);
      for (int32_t s = 0; s < rules_[r].fsm.num_states(); ++s) {
        reaches_final_[r][s] = ReachesFinalFree(rules_[r], s, nullable_);
      }
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (int32_t r = 0; r < n_; ++r) {
        const Fsm& fsm = rules_[r].fsm;
        for (int32_t s = 0; s < fsm.num_states(); ++s) {
          ByteSet acc = first_[r][s];
          for (const auto& e : fsm.edges(s)) {
            if (e.IsTerminal()) {
              acc.SetRange(e.lower, e.upper);
            } else if (e.IsEpsilon()) {
              acc.Merge(first_[r][e.target]);
            } else {
              acc.Merge(first_[e.rule][rules_[e.rule].fsm.initial()]);
              if (nullable_[e.rule]) acc.Merge(first_[r][e.target]);
            }
          }
          if (first_[r][s].Merge(acc)) changed = true;
        }
      }
    }
  }

  // Bytes that may directly follow a completion of each rule (or a body match, for repeats).
  void ComputeFollow() {
    after_final_.assign(n_, ByteSet{});
    for (bool changed = true; changed;) {
      changed = false;
      for (int32_t r = 0; r < n_; ++r) {
        ByteSet acc;
        if (rules_[r].kind == RuleKind::kRepeat) acc.Merge(first_[r][rules_[r].fsm.initial()]);
        for (const auto& site : sites_[r]) {
          acc.Merge(first_[site.rule][site.target]);
          if (reaches_final_[site.rule][site.target]) acc.Merge(after_final_[site.rule]);
        }
        if (after_final_[r].Merge(acc)) changed = true;
      }
    }
  }

  ByteSet SecondSet(int32_t r, int32_t s) const {
    ByteSet out = first_[r][s];
    if (reaches_final_[r][s]) out.Merge(after_final_[r]);
    return out;
  }

  const std::vector<CompiledRule>& rules_;
  int32_t n_;
  std::vector<std::vector<Site>> sites_;
  std::vector<bool> nullable_;
  std::vector<std::vector<ByteSet>> first_;
  std::vector<std::vector<bool>> reaches_final_;
  std::vector<ByteSet> after_final_;
};

}  // namespace

std::vector<Lookahead> ComputeLookaheads(const std::vector<CompiledRule>& rules) {
  LookaheadBuilder builder(rules);
  std::vector<Lookahead> out;
  out.reserve(rules.size());
  for (int32_t r = 0; r < static_cast<int32_t>(rules.size()); ++r) out.push_back(builder.Build(r));
  return out;
}

/****************** Compilation ******************/

std::shared_ptr<const CompiledGrammar> CompiledGrammar::Compile(const Grammar& grammar,
                                                                const CompileOptions& options) {
  ThrowIfInvalid(grammar);
  auto out = std::make_shared<CompiledGrammar>();
  out->source_ = grammar;
  out->options_ = options;
  out->lowered_ = options.compress_repetitions
                      ? CompressRepetitions(grammar, options.repetition_threshold)
                      : grammar;

  std::vector<LoweredRule> lowered;
  std::vector<LoweredRule> lifted;
  TailLifter lifter(&lifted);
  for (const auto& rule : out->lowered_.rules()) {
    RuleKind kind =
        rule.body->kind == ExprKind::kTagDispatch ? RuleKind::kDispatch : RuleKind::kNormal;
    lowered.push_back({rule.name, kind, lifter.Lift(rule.body, rule.name)});
  }
  lowered.insert(lowered.end(), lifted.begin(), lifted.end());
  lowered.push_back({kStartName, RuleKind::kStart, RuleExpr::Ref(out->lowered_.root_name())});

  std::unordered_map<std::string, int32_t> index;
  for (int32_t i = 0; i < static_cast<int32_t>(lowered.size()); ++i) index[lowered[i].name] = i;
  auto resolve = [&](std::string_view name) {
    auto it = index.find(std::string(name));
    if (it == index.end()) throw Error(ErrorKind::kUnknownRule, std::string(name));
    return it->second;
  };

  const auto n = static_cast<int32_t>(lowered.size());
  std::vector<CompiledRule> rules(n);
  std::vector<Fsm> fsms(n);
  std::vector<uint64_t> salts(n);
  for (int32_t i = 0; i < n; ++i) {
    const LoweredRule& lr = lowered[i];
    CompiledRule& cr = rules[i];
    cr.name = lr.name;
    cr.kind = lr.kind;
    cr.rep_min = lr.rep_min;
    cr.rep_max = lr.rep_max;
    cr.rep_window = lr.rep_window;
    Fsm fsm = lr.kind == RuleKind::kDispatch ? CompileTagDispatch(lr.body->dispatch, resolve)
                                             : BuildFsm(*lr.body, resolve);
    auto det = Determinize(fsm, options.determinize_cap);
    cr.determinize_blowup = det.blowup;
    fsms[i] = std::move(det.fsm);
    salts[i] = KindSalt(lr);
  }

  std::vector<uint64_t> hashes = HashRules(fsms, salts);
  std::vector<std::optional<uint64_t>> env(hashes.begin(), hashes.end());
  for (int32_t i = 0; i < n; ++i) {
    rules[i].hash = hashes[i];
    rules[i].fsm = Canonicalize(fsms[i], env);
    rules[i].fsm.hash = hashes[i];
    rules[i].states = SplitStates(rules[i].fsm);
  }
  std::vector<bool> nullable = RuleNullability(rules);
  for (int32_t i = 0; i < n; ++i) rules[i].nullable = nullable[i];
  std::vector<Lookahead> lookaheads = ComputeLookaheads(rules);
  for (int32_t i = 0; i < n; ++i) rules[i].lookahead = std::move(lookaheads[i]);

  out->root_ = index.at(out->lowered_.root_name());
  out->rules_ = std::move(rules);
  return out;
}

int64_t CompiledGrammar::total_states() const {
  int64_t n = 0;
  for (const auto& r : rules_) n += r.fsm.num_states();
  return n;
}

int64_t CompiledGrammar::total_edges() const {
  int64_t n = 0;
  for (const auto& r : rules_) n += r.fsm.num_edges();
  return n;
}

}  // namespace gramdash
