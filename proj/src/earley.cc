/*!
 *  Copyright (c) 2026 by Contributors
 * \file earley.cc
 */
#include "gramdash/earley.h"

#include <sstream>

namespace gramdash {

EarleyParser::EarleyParser(std::shared_ptr<const CompiledGrammar> grammar)
    : grammar_(std::move(grammar)) {
  const int32_t start = grammar_->start_rule();
  Reset({start, grammar_->rule(start).fsm.initial(), 0, 0});
}

EarleyParser::EarleyParser(std::shared_ptr<const CompiledGrammar> grammar, const LocalRoot& root)
    : grammar_(std::move(grammar)),
      local_(true),
      root_rule_(root.rule),
      crossing_cap_(root.crossing_cap) {
  Reset({root.rule, root.state, kRootOrigin, 0});
}

void EarleyParser::Reset(const EarleyItem& seed) {
  items_.clear();
  waiters_.clear();
  chart_begin_ = {0};
  waiter_begin_ = {0};
  root_completed_ = {false};
  seen_.clear();
  Add(seed);
  Closure(0);
}

void EarleyParser::Add(const EarleyItem& item) {
  if (seen_.insert(item).second) items_.push_back(item);
}

void EarleyParser::Complete(int32_t rule, int32_t origin) {
  if (origin == kRootOrigin) {
    root_completed_.back() = true;
    return;
  }
  const size_t end = origin + 1 < static_cast<int32_t>(waiter_begin_.size())
                         ? waiter_begin_[origin + 1]
                         : waiters_.size();
  for (size_t w = waiter_begin_[origin]; w < end; ++w) {
    if (waiters_[w].awaited == rule) Add(waiters_[w].advanced);
  }
}

void EarleyParser::Closure(size_t from) {
  const CompiledGrammar& g = *grammar_;
  const int32_t j = position();
  for (size_t i = from; i < items_.size(); ++i) {
    const EarleyItem it = items_[i];
    const CompiledRule& rule = g.rule(it.rule);
    const StateInfo& info = rule.states[it.state];
    for (int32_t t : info.epsilons) Add({it.rule, t, it.origin, it.count});
    for (const auto& e : info.refs) {
      waiters_.push_back({e.rule, {it.rule, e.target, it.origin, it.count}});
      Add({e.rule, g.rule(e.rule).fsm.initial(), j, 0});
      if (g.rule(e.rule).nullable) Add({it.rule, e.target, it.origin, it.count});
    }
    if (!info.final) continue;
    if (rule.kind != RuleKind::kRepeat) {
      Complete(it.rule, it.origin);
      continue;
    }
    const int32_t init = rule.fsm.initial();
    if (it.origin == kRootOrigin) {
      root_completed_.back() = true;
      if (crossing_cap_ < 0) {
        Add({it.rule, init, kRootOrigin, 0});
      } else if (it.count < crossing_cap_) {
        Add({it.rule, init, kRootOrigin, it.count + 1});
      }
      continue;
    }
    const int64_t done = static_cast<int64_t>(it.count) + 1;
    if (done >= rule.rep_min) Complete(it.rule, it.origin);
    if (rule.rep_max == kUnbounded) {
      Add({it.rule, init, it.origin, static_cast<int32_t>(std::min<int64_t>(done, rule.rep_min))});
    } else if (done < rule.rep_max) {
      Add({it.rule, init, it.origin, static_cast<int32_t>(done)});
    }
  }
}

bool EarleyParser::Advance(uint8_t byte) {
  const size_t begin = chart_begin_.back();
  const size_t end = items_.size();
  seen_.clear();
  chart_begin_.push_back(end);
  waiter_begin_.push_back(waiters_.size());
  root_completed_.push_back(false);
  for (size_t i = begin; i < end; ++i) {
    const EarleyItem it = items_[i];
    for (const auto& e : grammar_->state(it.rule, it.state).terminals) {
      if (e.lower <= byte && byte <= e.upper) Add({it.rule, e.target, it.origin, it.count});
    }
  }
  if (items_.size() == end) {
    chart_begin_.pop_back();
    waiter_begin_.pop_back();
    root_completed_.pop_back();
    return false;
  }
  Closure(end);
  return true;
}

bool EarleyParser::AdvanceBytes(std::string_view bytes) {
  const int32_t marker = Checkpoint();
  for (char c : bytes) {
    if (!Advance(static_cast<uint8_t>(c))) {
      Rollback(marker);
      return false;
    }
  }
  return true;
}

void EarleyParser::Rollback(int32_t marker) {
  if (marker < 0 || marker > position()) {
    throw Error(ErrorKind::kInvalidMarker,
                std::to_string(marker) + " at position " + std::to_string(position()));
  }
  const auto keep = static_cast<size_t>(marker) + 1;
  if (keep == chart_begin_.size()) return;
  items_.resize(chart_begin_[keep]);
  waiters_.resize(waiter_begin_[keep]);
  chart_begin_.resize(keep);
  waiter_begin_.resize(keep);
  root_completed_.resize(keep);
}

bool EarleyParser::CanTerminate() const {
  if (local_) return RootCompleted();
  const int32_t start = grammar_->start_rule();
  for (const auto& it : CurrentItems()) {
    if (it.rule == start && it.origin == 0 && grammar_->state(it.rule, it.state).final) return true;
  }
  return false;
}

std::span<const EarleyItem> EarleyParser::Items(int32_t pos) const {
  const size_t begin = chart_begin_[pos];
  const size_t end = pos + 1 < static_cast<int32_t>(chart_begin_.size()) ? chart_begin_[pos + 1]
                                                                          : items_.size();
  return {items_.data() + begin, end - begin};
}

std::vector<EarleyItem> EarleyParser::ScannableItems() const {
  std::vector<EarleyItem> out;
  for (const auto& it : CurrentItems()) {
    if (!grammar_->state(it.rule, it.state).terminals.empty()) out.push_back(it);
  }
  return out;
}

std::string EarleyParser::SerializeCharts() const {
  std::ostringstream os;
  for (int32_t pos = 0; pos <= position(); ++pos) {
    os << pos << ":";
    for (const auto& it : Items(pos)) {
      os << " (" << grammar_->rule(it.rule).name << "," << it.state << "," << it.origin << ","
         << it.count << ")";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace gramdash
