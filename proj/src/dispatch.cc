/*!
 *  Copyright (c) 2026 by Contributors
 * \file dispatch.cc
 */
#include "gramdash/dispatch.h"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace gramdash {

/****************** AcAutomaton ******************/

AcAutomaton AcAutomaton::Build(std::span<const std::string> patterns) {
  std::set<std::string> seen;
  for (const auto& p : patterns) {
    if (p.empty()) throw Error(ErrorKind::kEmptyTag, "patterns must be non-empty");
    if (!seen.insert(p).second) throw Error(ErrorKind::kDuplicateTag, p);
  }

  // Trie with provisional ids, then renumbered in BFS order.
  std::vector<std::map<uint8_t, int32_t>> trie(1);
  std::vector<int32_t> terminal_of(1, -1);
  for (int32_t id = 0; id < static_cast<int32_t>(patterns.size()); ++id) {
    int32_t node = 0;
    for (char c : patterns[id]) {
      auto b = static_cast<uint8_t>(c);
      auto it = trie[node].find(b);
      if (it == trie[node].end()) {
        trie.emplace_back();
        terminal_of.push_back(-1);
        it = trie[node].emplace(b, static_cast<int32_t>(trie.size()) - 1).first;
      }
      node = it->second;
    }
    terminal_of[node] = id;
  }

  std::vector<int32_t> order{0};
  for (size_t i = 0; i < order.size(); ++i) {
    for (const auto& [b, child] : trie[order[i]]) order.push_back(child);
  }
  std::vector<int32_t> renumber(trie.size());
  for (size_t i = 0; i < order.size(); ++i) renumber[order[i]] = static_cast<int32_t>(i);

  AcAutomaton ac;
  ac.patterns_.assign(patterns.begin(), patterns.end());
  const auto n = static_cast<int32_t>(order.size());
  ac.children_.resize(n);
  ac.fail_.assign(n, 0);
  ac.depth_.assign(n, 0);
  ac.outputs_.resize(n);
  ac.delta_.resize(n);
  for (int32_t i = 0; i < n; ++i) {
    for (const auto& [b, child] : trie[order[i]]) {
      ac.children_[i].emplace_back(b, renumber[child]);
      ac.depth_[renumber[child]] = ac.depth_[i] + 1;
    }
  }

  // BFS order guarantees fail targets are complete before they are used.
  for (int32_t node = 0; node < n; ++node) {
    const int32_t own = terminal_of[order[node]];
    if (own >= 0) ac.outputs_[node].push_back(own);
    if (node != 0) {
      const auto& inherited = ac.outputs_[ac.fail_[node]];
      ac.outputs_[node].insert(ac.outputs_[node].end(), inherited.begin(), inherited.end());
    }
    for (int b = 0; b < 256; ++b) {
      ac.delta_[node][b] = node == 0 ? 0 : ac.delta_[ac.fail_[node]][b];
    }
    for (const auto& [b, child] : ac.children_[node]) {
      ac.fail_[child] = node == 0 ? 0 : ac.delta_[ac.fail_[node]][b];
      ac.delta_[node][b] = child;
    }
  }
  return ac;
}

int32_t AcAutomaton::Goto(int32_t node, uint8_t byte) const {
  for (const auto& [b, child] : children_[node]) {
    if (b == byte) return child;
  }
  return -1;
}

/****************** AC -> EBNF ******************/

namespace {

int64_t CountExprNodes(const RuleExpr& e) {
  int64_t n = 1;
  for (const auto& c : e.children) n += CountExprNodes(*c);
  return n;
}

std::string NodeRuleName(int32_t node) { return "s" + std::to_string(node); }

}  // namespace

std::pair<Grammar, AcEbnfStats> AcToEbnf(const AcAutomaton& ac) {
  std::vector<Rule> rules;
  for (int32_t node = 0; node < ac.num_nodes(); ++node) {
    std::vector<ExprPtr> alternatives;
    if (!ac.Outputs(node).empty()) {
      rules.push_back({NodeRuleName(node), RuleExpr::Empty()});
      continue;
    }
    std::vector<ByteRange> seen;
    for (const auto& [b, child] : ac.Children(node)) {
      alternatives.push_back(RuleExpr::Sequence(
          {RuleExpr::Bytes(std::string(1, static_cast<char>(b))), RuleExpr::Ref(NodeRuleName(child))}
      ));
      seen.push_back({b, b});
    }
    if (node == 0) {
      alternatives.push_back(RuleExpr::Sequence(
          {RuleExpr::CharClass(std::move(seen), true), RuleExpr::Ref(NodeRuleName(0))}
      ));
    } else {
      alternatives.push_back(RuleExpr::Ref(NodeRuleName(ac.Fail(node))));
    }
    rules.push_back({NodeRuleName(node), RuleExpr::Choice(std::move(alternatives))});
  }
  Grammar grammar(std::move(rules), NodeRuleName(0));

  AcEbnfStats stats;
  stats.states = ac.num_nodes();
  stats.transitions = ac.num_goto_edges() + (ac.num_nodes() - 1);
  for (const auto& r : grammar.rules()) stats.ebnf_size += 1 + CountExprNodes(*r.body);
  stats.ebnf_bytes = static_cast<int64_t>(grammar.ToString().size());
  return {std::move(grammar), stats};
}

/****************** TagDispatch -> FSM ******************/

std::vector<std::string> DispatchPatterns(const TagDispatchSpec& spec) {
  std::vector<std::string> patterns;
  for (const auto& [tag, rule] : spec.pairs) patterns.push_back(tag);
  for (const auto& stop : spec.stop_strs) patterns.push_back(stop);
  return patterns;
}

Fsm CompileTagDispatch(const TagDispatchSpec& spec,
                       const std::function<int32_t(std::string_view)>& resolve,
                       std::vector<int32_t>* ac_node_of_state) {
  const auto patterns = DispatchPatterns(spec);
  const auto num_tags = static_cast<int32_t>(spec.pairs.size());
  Fsm fsm;
  if (patterns.empty()) {
    // No tags and no stops: free text that may end anywhere.
    int32_t s = fsm.AddState();
    fsm.AddEdge(s, FsmEdge::Terminal(0, 255, s));
    fsm.SetFinal(s);
    if (ac_node_of_state) *ac_node_of_state = {0};
    return fsm;
  }
  AcAutomaton ac = AcAutomaton::Build(patterns);
  const int32_t n = ac.num_nodes();
  for (int32_t i = 0; i < n + num_tags + 1; ++i) fsm.AddState();
  const int32_t done = n + num_tags;
  fsm.set_initial(0);
  fsm.SetFinal(done);

  for (int32_t node = 0; node < n; ++node) {
    fsm.SetFinal(node, spec.stop_strs.empty());
    if (!ac.Outputs(node).empty()) continue;  // never rested on: matching fires on arrival
    auto target_of = [&](int b) {
      int32_t next = ac.Next(node, static_cast<uint8_t>(b));
      if (ac.Outputs(next).empty()) return next;
      int32_t pattern = ac.Outputs(next).front();
      return pattern < num_tags ? n + pattern : done;
    };
    for (int b = 0; b < 256;) {
      int32_t target = target_of(b);
      int e = b;
      while (e + 1 < 256 && target_of(e + 1) == target) ++e;
      fsm.AddEdge(node, FsmEdge::Terminal(static_cast<uint8_t>(b), static_cast<uint8_t>(e), target));
      b = e + 1;
    }
  }
  for (int32_t tag = 0; tag < num_tags; ++tag) {
    fsm.AddEdge(n + tag, FsmEdge::RuleRef(resolve(spec.pairs[tag].second),
                                          spec.loop_after_dispatch ? 0 : done));
  }
  if (ac_node_of_state) {
    ac_node_of_state->assign(fsm.num_states(), -1);
    for (int32_t node = 0; node < n; ++node) (*ac_node_of_state)[node] = node;
  }
  return fsm;
}

/****************** Streaming dispatcher ******************/

DispatchProgram DispatchProgram::Build(TagDispatchSpec spec) {
  auto patterns = DispatchPatterns(spec);
  DispatchProgram program{std::move(spec), AcAutomaton::Build(patterns)};
  return program;
}

DispatchStepResult DispatchStep(DispatchMode mode, const DispatchProgram& program, uint8_t byte,
                                const SubParserFactory& factory) {
  using Kind = DispatchMode::Kind;
  if (mode.kind == Kind::kTerminated) return {std::move(mode), false};

  if (mode.kind == Kind::kDispatched) {
    if (mode.sub->Advance(byte)) {
      if (mode.sub->CanTerminate() && !mode.sub->HasContinuation()) {
        if (!program.spec.loop_after_dispatch) return {DispatchMode::Terminated(), true};
        return {DispatchMode::Dispatching(0), true};
      }
      return {std::move(mode), true};
    }
    if (!mode.sub->CanTerminate()) {
      throw Error(ErrorKind::kSubGrammarReject, "byte " + std::to_string(byte) + " in '" +
                                                    program.spec.pairs[mode.tag].second + "'");
    }
    if (!program.spec.loop_after_dispatch) return {DispatchMode::Terminated(), false};
    mode = DispatchMode::Dispatching(0);
  }

  auto [next, matches] = program.ac.Feed(mode.ac_state, byte);
  if (matches.empty()) return {DispatchMode::Dispatching(next), true};
  const int32_t pattern = matches.front();
  if (pattern >= program.num_tags()) return {DispatchMode::Terminated(), true};
  DispatchMode dispatched{Kind::kDispatched, 0, pattern,
                          factory(program.spec.pairs[pattern].second)};
  if (dispatched.sub->CanTerminate() && !dispatched.sub->HasContinuation()) {
    if (!program.spec.loop_after_dispatch) return {DispatchMode::Terminated(), true};
    return {DispatchMode::Dispatching(0), true};
  }
  return {std::move(dispatched), true};
}

}  // namespace gramdash
