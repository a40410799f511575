#pragma once

// Online side of the test: the per-object state, the action rule read off a solved
// PolicyTable, and a driver that runs any sequential policy against a label source.

#include <adasprt/core/model.hpp>
#include <adasprt/dp/policy_table.hpp>

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace adasprt {

struct TraceStep {
  std::size_t worker;
  Label label;
  double l_after;
};

/// Running state of one object: evidence l, labels collected n, and the query history.
class SequentialState {
 public:
  double l() const { return l_; }
  std::size_t n() const { return trace_.size(); }
  std::span<const TraceStep> trace() const { return trace_; }

  bool queried(std::size_t worker) const {
    return std::any_of(trace_.begin(), trace_.end(), [&](const TraceStep& s) { return s.worker == worker; });
  }

  /// New state after `worker` (index `worker_index`) reported `label`.
  [[nodiscard]] SequentialState step(const WorkerParams& worker, std::size_t worker_index, Label label) const {
    SequentialState next = *this;
    next.advance(worker, worker_index, label);
    return next;
  }

  void advance(const WorkerParams& worker, std::size_t worker_index, Label label) {
    l_ += log_lr_increment(worker, label);
    trace_.push_back({worker_index, label, l_});
  }

 private:
  double l_ = 0.0;
  std::vector<TraceStep> trace_;
};

inline SequentialState step(const SequentialState& state, const WorkerParams& worker, std::size_t worker_index,
                            Label label) {
  return state.step(worker, worker_index, label);
}

struct Continue {
  std::size_t worker;
  friend bool operator==(const Continue&, const Continue&) = default;
};
struct Stop {
  Label decision;
  friend bool operator==(const Stop&, const Stop&) = default;
};
using Action = std::variant<Continue, Stop>;

/// repeat: a worker type may be asked again for a fresh label (simulation).
/// no_repeat: each worker labels an object at most once (dataset replay).
enum class QueryMode { repeat, no_repeat };

namespace detail {

inline bool is_available(std::span<const std::size_t> available, std::size_t worker) {
  return std::find(available.begin(), available.end(), worker) != available.end();
}

/// Argmin of the one-label lookahead over `available`; lowest index wins ties.
inline std::size_t best_available(const PolicyTable& policy, const SequentialState& state,
                                  std::span<const std::size_t> available) {
  const auto workers = policy.workers();
  const std::size_t next_n = state.n() + 1;
  auto g_next = [&](double y) { return policy.value(y, next_n); };
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_risk = std::numeric_limits<double>::infinity();
  for (std::size_t j : available) {
    const double v = expected_next_risk(g_next, state.l(), policy.prior(), workers[j]);
    if (v < best_risk || (v == best_risk && j < best)) {
      best_risk = v;
      best = j;
    }
  }
  return best;
}

}  // namespace detail

/// True when the solved policy stops at evidence l after n labels.
inline bool policy_stops(const PolicyTable& policy, double l, std::size_t n) {
  if (n >= policy.horizon()) return true;
  if (auto node = policy.lattice_node(l, n)) return !policy.lattice()[n].proceed[*node];
  return l >= policy.upper(n) || l <= policy.lower(n);
}

/// Next action of the solved Ada-SPRT policy. `available` lists the workers that can be
/// asked now (indices into policy.workers()).
inline Action next_action(const PolicyTable& policy, const SequentialState& state,
                          std::span<const std::size_t> available, QueryMode mode = QueryMode::repeat) {
  const std::size_t n = state.n();
  const double l = state.l();
  if (available.empty() || policy_stops(policy, l, n)) return Stop{bayes_decision(l, policy.prior())};
  if (mode == QueryMode::repeat) {
    std::int32_t cached;
    if (auto node = policy.lattice_node(l, n)) {
      cached = policy.lattice()[n].select[*node];
    } else {
      cached = policy.select(n + 1)[policy.grid().nearest(l)];
    }
    if (cached >= 0) {
      // Duplicated worker types share the representative's entry.
      const auto workers = policy.workers();
      for (std::size_t j : available) {
        if (workers[j] == workers[static_cast<std::size_t>(cached)]) return Continue{j};
      }
    }
  }
  return Continue{detail::best_available(policy, state, available)};
}

/// Ada-SPRT policy bound to a solved table.
class AdaPolicy {
 public:
  explicit AdaPolicy(const PolicyTable& table, QueryMode mode = QueryMode::repeat) : table_(&table), mode_(mode) {}

  Action next_action(const SequentialState& state, std::span<const std::size_t> available) const {
    return adasprt::next_action(*table_, state, available, mode_);
  }
  std::span<const WorkerParams> workers() const { return table_->workers(); }
  const Prior& prior() const { return table_->prior(); }
  std::size_t horizon() const { return table_->horizon(); }
  QueryMode mode() const { return mode_; }
  const PolicyTable& table() const { return *table_; }

 private:
  const PolicyTable* table_;
  QueryMode mode_;
};

/// Anything that can drive an episode: KL baseline, Ada-SPRT, or future index policies.
template <class P>
concept SequentialPolicy = requires(const P& p, const SequentialState& s, std::span<const std::size_t> a) {
  { p.next_action(s, a) } -> std::same_as<Action>;
  { p.workers() } -> std::convertible_to<std::span<const WorkerParams>>;
  { p.prior() } -> std::convertible_to<const Prior&>;
  { p.horizon() } -> std::convertible_to<std::size_t>;
};

/// Answers label requests for one object. `candidates()` lists the workers it can serve;
/// `query` returns nullopt when a worker cannot label the object.
template <class S>
concept LabelSource = requires(S& s, std::size_t worker) {
  { s.candidates() } -> std::convertible_to<std::span<const std::size_t>>;
  { s.query(worker) } -> std::same_as<std::optional<Label>>;
};

struct Episode {
  std::size_t stop_time = 0;  // N
  Label decision = 1;         // D
  SequentialState state;
  bool forced = false;  // stopped early because the source ran out of workers or labels
};

/// Runs one object to termination.
template <SequentialPolicy P, LabelSource S>
Episode run_episode(const P& policy, S& source, QueryMode mode) {
  const auto workers = policy.workers();
  std::vector<std::size_t> available(source.candidates().begin(), source.candidates().end());
  Episode ep;
  for (;;) {
    const Action action = policy.next_action(ep.state, available);
    if (const auto* stop = std::get_if<Stop>(&action)) {
      ep.decision = stop->decision;
      ep.forced = ep.forced || (available.empty() && ep.state.n() < policy.horizon());
      break;
    }
    const std::size_t j = std::get<Continue>(action).worker;
    const auto label = source.query(j);
    if (!label) {
      ep.forced = true;
      ep.decision = bayes_decision(ep.state.l(), policy.prior());
      break;
    }
    ep.state.advance(workers[j], j, *label);
    if (mode == QueryMode::no_repeat) std::erase(available, j);
  }
  ep.stop_time = ep.state.n();
  return ep;
}

}  // namespace adasprt
