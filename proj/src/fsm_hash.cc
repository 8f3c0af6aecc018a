/*!
 *  Copyright (c) 2026 by Contributors
 * \file fsm_hash.cc
 * \brief Structural FSM hashing across the rule reference graph.
 */
#include <algorithm>
#include <atomic>
#include <deque>
#include <tuple>

#include "gramdash/fsm.h"

namespace gramdash {

namespace {

uint64_t RefHash(const FsmEdge& e, HashEnv env) {
  if (e.rule < 0 || static_cast<size_t>(e.rule) >= env.size() || !env[e.rule].has_value()) {
    throw Error(ErrorKind::kUnhashedReference, "rule #" + std::to_string(e.rule));
  }
  return *env[e.rule];
}

// Terminal edges by (range, target), then references by (referenced hash, target), then
// epsilon edges by target.
std::vector<FsmEdge> SortedEdges(const Fsm& fsm, int32_t state, HashEnv env) {
  std::vector<FsmEdge> edges = fsm.edges(state);
  auto key = [&](const FsmEdge& e) {
    switch (e.kind) {
      case FsmEdge::Kind::kTerminal:
        return std::make_tuple(0, static_cast<uint64_t>(e.lower), static_cast<uint64_t>(e.upper),
                               e.target);
      case FsmEdge::Kind::kRuleRef:
        return std::make_tuple(1, RefHash(e, env), uint64_t{0}, e.target);
      case FsmEdge::Kind::kEpsilon:
        break;
    }
    return std::make_tuple(2, uint64_t{0}, uint64_t{0}, e.target);
  };
  std::stable_sort(edges.begin(), edges.end(), [&](const FsmEdge& a, const FsmEdge& b) {
    return key(a) < key(b);
  });
  return edges;
}

// Shared BFS walk: calls on_state(s) when a state is visited and on_edge(e, id) per edge.
template <typename OnState, typename OnEdge>
std::vector<int32_t> CanonicalWalk(const Fsm& fsm, HashEnv env, OnState on_state, OnEdge on_edge) {
  std::vector<int32_t> id(fsm.num_states(), -1);
  std::vector<int32_t> order;
  std::deque<int32_t> queue{fsm.initial()};
  id[fsm.initial()] = 0;
  order.push_back(fsm.initial());
  while (!queue.empty()) {
    int32_t s = queue.front();
    queue.pop_front();
    on_state(s);
    for (const auto& e : SortedEdges(fsm, s, env)) {
      if (id[e.target] < 0) {
        id[e.target] = static_cast<int32_t>(order.size());
        order.push_back(e.target);
        queue.push_back(e.target);
      }
      on_edge(e, id[e.target]);
    }
  }
  return order;
}

}  // namespace

uint64_t HashFsm(const Fsm& fsm, HashEnv env) {
  const uint64_t k = kNonTerminalSentinel;
  uint64_t h = 0;
  CanonicalWalk(
      fsm, env,
      [&](int32_t s) { h = HashCombine(h, fsm.IsFinal(s) ? 1 : 0, k, k); },
      [&](const FsmEdge& e, int32_t target_id) {
        switch (e.kind) {
          case FsmEdge::Kind::kTerminal:
            h = HashCombine(h, e.lower, e.upper);
            break;
          case FsmEdge::Kind::kRuleRef:
            h = HashCombine(h, k, RefHash(e, env));
            break;
          case FsmEdge::Kind::kEpsilon:
            h = HashCombine(h, k, k);
            break;
        }
        h = HashCombine(h, static_cast<uint64_t>(target_id));
      }
  );
  return h;
}

std::vector<int32_t> CanonicalOrder(const Fsm& fsm, HashEnv env) {
  return CanonicalWalk(fsm, env, [](int32_t) {}, [](const FsmEdge&, int32_t) {});
}

Fsm Canonicalize(const Fsm& fsm, HashEnv env) {
  std::vector<int32_t> order = CanonicalOrder(fsm, env);
  std::vector<int32_t> id(fsm.num_states(), -1);
  for (size_t i = 0; i < order.size(); ++i) id[order[i]] = static_cast<int32_t>(i);
  Fsm out;
  for (size_t i = 0; i < order.size(); ++i) out.AddState();
  out.set_initial(0);
  for (size_t i = 0; i < order.size(); ++i) {
    out.SetFinal(static_cast<int32_t>(i), fsm.IsFinal(order[i]));
    for (auto e : SortedEdges(fsm, order[i], env)) {
      e.target = id[e.target];
      out.AddEdge(static_cast<int32_t>(i), e);
    }
  }
  out.hash = fsm.hash;
  return out;
}

std::vector<uint64_t> HashCycle(std::span<const uint64_t> local) {
  std::vector<uint64_t> out;
  out.reserve(local.size());
  for (size_t i = 0; i < local.size(); ++i) {
    uint64_t h = 0;
    for (size_t j = 0; j < local.size(); ++j) h = HashCombine(h, local[(i + j) % local.size()]);
    out.push_back(h);
  }
  return out;
}

uint64_t FreshUniqueHash() {
  static std::atomic<uint64_t> counter{1};
  return HashCombine(0x5bd1e9955bd1e995ULL, counter.fetch_add(1), kNonTerminalSentinel);
}

namespace {

// Tarjan's SCC; components come out in reverse topological order (callees first).
class SccFinder {
 public:
  explicit SccFinder(const std::vector<std::vector<int32_t>>& graph)
      : graph_(graph),
        index_(graph.size(), -1),
        low_(graph.size(), 0),
        on_stack_(graph.size(), false) {}

  std::vector<std::vector<int32_t>> Run() {
    for (int32_t v = 0; v < static_cast<int32_t>(graph_.size()); ++v) {
      if (index_[v] < 0) Visit(v);
    }
    return std::move(components_);
  }

 private:
  void Visit(int32_t root) {
    // Iterative DFS to stay safe on deep reference chains.
    std::vector<std::pair<int32_t, size_t>> frames{{root, 0}};
    Open(root);
    while (!frames.empty()) {
      auto& [v, next] = frames.back();
      if (next < graph_[v].size()) {
        int32_t w = graph_[v][next++];
        if (index_[w] < 0) {
          Open(w);
          frames.emplace_back(w, 0);
        } else if (on_stack_[w]) {
          low_[v] = std::min(low_[v], index_[w]);
        }
        continue;
      }
      if (low_[v] == index_[v]) {
        std::vector<int32_t> component;
        int32_t w;
        do {
          w = stack_.back();
          stack_.pop_back();
          on_stack_[w] = false;
          component.push_back(w);
        } while (w != v);
        components_.push_back(std::move(component));
      }
      int32_t finished = v;
      frames.pop_back();
      if (!frames.empty()) {
        int32_t parent = frames.back().first;
        low_[parent] = std::min(low_[parent], low_[finished]);
      }
    }
  }

  void Open(int32_t v) {
    index_[v] = low_[v] = counter_++;
    stack_.push_back(v);
    on_stack_[v] = true;
  }

  const std::vector<std::vector<int32_t>>& graph_;
  std::vector<int32_t> index_, low_;
  std::vector<bool> on_stack_;
  std::vector<int32_t> stack_;
  int32_t counter_ = 0;
  std::vector<std::vector<int32_t>> components_;
};

}  // namespace

std::vector<uint64_t> HashRules(std::span<const Fsm> fsms, std::span<const uint64_t> salts) {
  const auto n = static_cast<int32_t>(fsms.size());
  std::vector<std::vector<int32_t>> graph(n);
  for (int32_t r = 0; r < n; ++r) {
    for (int32_t s = 0; s < fsms[r].num_states(); ++s) {
      for (const auto& e : fsms[r].edges(s)) {
        if (e.IsRuleRef()) graph[r].push_back(e.rule);
      }
    }
  }
  std::vector<std::optional<uint64_t>> env(n);
  auto local_hash = [&](int32_t r) {
    uint64_t h = HashFsm(fsms[r], env);
    return salts[r] != 0 ? HashCombine(h, salts[r]) : h;
  };

  for (const auto& component : SccFinder(graph).Run()) {
    if (component.size() == 1 &&
        std::find(graph[component[0]].begin(), graph[component[0]].end(), component[0]) ==
            graph[component[0]].end()) {
      env[component[0]] = local_hash(component[0]);
      continue;
    }
    // A simple cycle: every member holds exactly one reference edge into the component.
    std::vector<int32_t> successor(n, -1);
    bool simple = true;
    for (int32_t r : component) {
      int inner = 0;
      for (int32_t target : graph[r]) {
        if (std::find(component.begin(), component.end(), target) != component.end()) {
          ++inner;
          successor[r] = target;
        }
      }
      simple = simple && inner == 1;
    }
    if (!simple) {
      for (int32_t r : component) env[r] = FreshUniqueHash();
      continue;
    }
    for (int32_t r : component) env[r] = kCycleSentinel;
    std::vector<int32_t> cycle{component.front()};
    while (successor[cycle.back()] != cycle.front()) cycle.push_back(successor[cycle.back()]);
    std::vector<uint64_t> local;
    local.reserve(cycle.size());
    for (int32_t r : cycle) local.push_back(local_hash(r));
    std::vector<uint64_t> finals = HashCycle(local);
    for (size_t i = 0; i < cycle.size(); ++i) env[cycle[i]] = finals[i];
  }

  std::vector<uint64_t> out(n);
  for (int32_t r = 0; r < n; ++r) out[r] = *env[r];
  return out;
}

/****************** Isomorphism ******************/

bool IsIsomorphic(const Fsm& lhs, const Fsm& rhs, HashEnv env) {
  auto labelled = [&](const Fsm& fsm, int32_t s) {
    std::vector<std::pair<std::tuple<int, uint64_t, uint64_t>, int32_t>> out;
    for (const auto& e : fsm.edges(s)) {
      std::tuple<int, uint64_t, uint64_t> label;
      if (e.IsTerminal()) {
        label = {0, e.lower, e.upper};
      } else if (e.IsRuleRef()) {
        label = {1, RefHash(e, env), 0};
      } else {
        label = {2, 0, 0};
      }
      out.emplace_back(label, e.target);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  };
  std::vector<int32_t> fwd(lhs.num_states(), -1), bwd(rhs.num_states(), -1);
  std::deque<std::pair<int32_t, int32_t>> queue{{lhs.initial(), rhs.initial()}};
  fwd[lhs.initial()] = rhs.initial();
  bwd[rhs.initial()] = lhs.initial();
  while (!queue.empty()) {
    auto [a, b] = queue.front();
    queue.pop_front();
    if (lhs.IsFinal(a) != rhs.IsFinal(b)) return false;
    auto ea = labelled(lhs, a), eb = labelled(rhs, b);
    if (ea.size() != eb.size()) return false;
    for (size_t i = 0; i < ea.size(); ++i) {
      if (ea[i].first != eb[i].first) return false;
      int32_t ta = ea[i].second, tb = eb[i].second;
      if (fwd[ta] < 0 && bwd[tb] < 0) {
        fwd[ta] = tb;
        bwd[tb] = ta;
        queue.emplace_back(ta, tb);
      } else if (fwd[ta] != tb || bwd[tb] != ta) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace gramdash
