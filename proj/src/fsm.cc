/*!
 *  Copyright (c) 2026 by Contributors
 * \file fsm.cc
 * \brief FSM construction and subset-construction determinization.
 */
#include "gramdash/fsm.h"

#include <algorithm>
#include <map>
#include <set>

namespace gramdash {

int32_t Fsm::num_edges() const {
  int32_t n = 0;
  for (const auto& e : edges_) n += static_cast<int32_t>(e.size());
  return n;
}

bool Fsm::HasEpsilon() const {
  for (const auto& es : edges_) {
    for (const auto& e : es) {
      if (e.IsEpsilon()) return true;
    }
  }
  return false;
}

bool Fsm::HasRuleRefs() const {
  for (const auto& es : edges_) {
    for (const auto& e : es) {
      if (e.IsRuleRef()) return true;
    }
  }
  return false;
}

bool Fsm::IsDeterministic() const {
  for (const auto& es : edges_) {
    std::vector<std::pair<int, int>> ranges;
    for (const auto& e : es) {
      if (e.IsEpsilon()) return false;
      if (e.IsTerminal()) ranges.emplace_back(e.lower, e.upper);
    }
    std::sort(ranges.begin(), ranges.end());
    for (size_t i = 1; i < ranges.size(); ++i) {
      if (ranges[i].first <= ranges[i - 1].second) return false;
    }
  }
  return true;
}

namespace {

std::set<int32_t> EpsilonClosure(const Fsm& fsm, std::set<int32_t> states) {
  std::vector<int32_t> stack(states.begin(), states.end());
  while (!stack.empty()) {
    int32_t s = stack.back();
    stack.pop_back();
    for (const auto& e : fsm.edges(s)) {
      if (e.IsEpsilon() && states.insert(e.target).second) stack.push_back(e.target);
    }
  }
  return states;
}

}  // namespace

bool Fsm::AcceptsSymbols(std::span<const int32_t> symbols) const {
  std::set<int32_t> current = EpsilonClosure(*this, {initial_});
  for (int32_t sym : symbols) {
    std::set<int32_t> next;
    for (int32_t s : current) {
      for (const auto& e : edges_[s]) {
        if (sym < 256 && e.IsTerminal() && e.lower <= sym && sym <= e.upper) next.insert(e.target);
        if (sym >= 256 && e.IsRuleRef() && e.rule == sym - 256) next.insert(e.target);
      }
    }
    current = EpsilonClosure(*this, std::move(next));
    if (current.empty()) return false;
  }
  return std::any_of(current.begin(), current.end(), [&](int32_t s) { return finals_[s]; });
}

/****************** Construction ******************/

namespace {

struct Fragment {
  int32_t start;
  int32_t end;
};

class FsmBuilder {
 public:
  explicit FsmBuilder(const std::function<int32_t(std::string_view)>& resolve)
      : resolve_(resolve) {}

  Fsm Finish(const RuleExpr& body) {
    Fragment f = Build(body);
    fsm_.set_initial(f.start);
    fsm_.SetFinal(f.end);
    return std::move(fsm_);
  }

 private:
  Fragment Build(const RuleExpr& e) {
    switch (e.kind) {
      case ExprKind::kEmpty: {
        int32_t s = fsm_.AddState();
        return {s, s};
      }
      case ExprKind::kBytes: {
        int32_t start = fsm_.AddState();
        int32_t cur = start;
        for (char c : e.bytes) {
          int32_t next = fsm_.AddState();
          auto b = static_cast<uint8_t>(c);
          fsm_.AddEdge(cur, FsmEdge::Terminal(b, b, next));
          cur = next;
        }
        return {start, cur};
      }
      case ExprKind::kCharClass: {
        int32_t s = fsm_.AddState(), t = fsm_.AddState();
        for (const auto& r : e.EffectiveRanges()) {
          fsm_.AddEdge(s, FsmEdge::Terminal(r.lower, r.upper, t));
        }
        return {s, t};
      }
      case ExprKind::kSequence: {
        Fragment first = Build(*e.children.front());
        int32_t end = first.end;
        for (size_t i = 1; i < e.children.size(); ++i) {
          Fragment next = Build(*e.children[i]);
          fsm_.AddEdge(end, FsmEdge::Epsilon(next.start));
          end = next.end;
        }
        return {first.start, end};
      }
      case ExprKind::kChoice: {
        int32_t s = fsm_.AddState(), t = fsm_.AddState();
        for (const auto& c : e.children) {
          Fragment alt = Build(*c);
          fsm_.AddEdge(s, FsmEdge::Epsilon(alt.start));
          fsm_.AddEdge(alt.end, FsmEdge::Epsilon(t));
        }
        return {s, t};
      }
      case ExprKind::kRuleRef: {
        int32_t s = fsm_.AddState(), t = fsm_.AddState();
        fsm_.AddEdge(s, FsmEdge::RuleRef(resolve_(e.bytes), t));
        return {s, t};
      }
      case ExprKind::kRepetition: {
        if (e.IsCompressedTail()) {
          throw Error(ErrorKind::kInvalidGrammar, "compressed repetition must be lifted to a rule");
        }
        if (e.max != kUnbounded) return Build(*ExpandRepetition(e.body(), e.min, e.max));
        int32_t start = fsm_.AddState();
        int32_t cur = start;
        for (int64_t i = 0; i < e.min; ++i) {
          Fragment copy = Build(*e.body());
          fsm_.AddEdge(cur, FsmEdge::Epsilon(copy.start));
          cur = copy.end;
        }
        Fragment loop = Build(*e.body());
        int32_t end = fsm_.AddState();
        fsm_.AddEdge(cur, FsmEdge::Epsilon(loop.start));
        fsm_.AddEdge(cur, FsmEdge::Epsilon(end));
        fsm_.AddEdge(loop.end, FsmEdge::Epsilon(loop.start));
        fsm_.AddEdge(loop.end, FsmEdge::Epsilon(end));
        return {start, end};
      }
      case ExprKind::kTagDispatch:
        throw Error(ErrorKind::kInvalidGrammar, "TagDispatch is compiled by the dispatch module");
    }
    return {0, 0};
  }

  const std::function<int32_t(std::string_view)>& resolve_;
  Fsm fsm_;
};

}  // namespace

Fsm BuildFsm(const RuleExpr& body, const std::function<int32_t(std::string_view)>& resolve) {
  return FsmBuilder(resolve).Finish(body);
}

/****************** Determinization ******************/

DeterminizeResult Determinize(const Fsm& fsm, int32_t state_cap) {
  using StateSet = std::vector<int32_t>;
  auto closure = [&](std::set<int32_t> seed) {
    auto c = EpsilonClosure(fsm, std::move(seed));
    return StateSet(c.begin(), c.end());
  };

  Fsm dfa;
  std::map<StateSet, int32_t> ids;
  std::vector<StateSet> pending;
  auto intern = [&](StateSet set) -> int32_t {
    auto it = ids.find(set);
    if (it != ids.end()) return it->second;
    int32_t id = dfa.AddState();
    ids.emplace(set, id);
    pending.push_back(std::move(set));
    return id;
  };

  dfa.set_initial(intern(closure({fsm.initial()})));
  for (size_t next = 0; next < pending.size(); ++next) {
    if (dfa.num_states() > state_cap) return {fsm, true};
    const StateSet set = pending[next];
    const auto id = static_cast<int32_t>(next);
    bool final = false;
    std::vector<int> cuts;
    std::map<int32_t, std::set<int32_t>> ref_targets;
    for (int32_t s : set) {
      final = final || fsm.IsFinal(s);
      for (const auto& e : fsm.edges(s)) {
        if (e.IsTerminal()) {
          cuts.push_back(e.lower);
          cuts.push_back(e.upper + 1);
        } else if (e.IsRuleRef()) {
          ref_targets[e.rule].insert(e.target);
        }
      }
    }
    dfa.SetFinal(id, final);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Elementary intervals [cuts[i], cuts[i+1]); adjacent intervals with equal targets merge.
    struct Piece {
      int lower, upper;
      int32_t target;
    };
    std::vector<Piece> pieces;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      int lo = cuts[i], hi = cuts[i + 1] - 1;
      std::set<int32_t> targets;
      for (int32_t s : set) {
        for (const auto& e : fsm.edges(s)) {
          if (e.IsTerminal() && e.lower <= lo && hi <= e.upper) targets.insert(e.target);
        }
      }
      if (targets.empty()) continue;
      int32_t target = intern(closure(std::move(targets)));
      if (!pieces.empty() && pieces.back().target == target && pieces.back().upper + 1 == lo) {
        pieces.back().upper = hi;
      } else {
        pieces.push_back({lo, hi, target});
      }
    }
    for (const auto& p : pieces) {
      dfa.AddEdge(
          id,
          FsmEdge::Terminal(static_cast<uint8_t>(p.lower), static_cast<uint8_t>(p.upper), p.target)
      );
    }
    for (auto& [rule, targets] : ref_targets) {
      dfa.AddEdge(id, FsmEdge::RuleRef(rule, intern(closure(std::move(targets)))));
    }
  }
  if (dfa.num_states() > state_cap) return {fsm, true};
  return {std::move(dfa), false};
}

}  // namespace gramdash
