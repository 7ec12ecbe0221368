#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pricewars/core.hpp"
#include "pricewars/demand.hpp"
#include "pricewars/response.hpp"
#include "pricewars/rng.hpp"

namespace pricewars {

struct SchedulerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchedulerSpec {
  enum class Kind { round_robin, alternating, fixed_list, random_fair, reverse_index };
  Kind kind = Kind::round_robin;
  std::vector<int> order;  // round_robin; 0-based
  std::vector<int> moves;  // fixed_list; 0-based
  bool repeat = true;      // fixed_list
  std::uint64_t seed = 0;  // random_fair
  int fairness_horizon = 0;  // 0 = default (8 * sellers)

  static SchedulerSpec round_robin_order(std::vector<int> ord) {
    SchedulerSpec s;
    s.kind = Kind::round_robin;
    s.order = std::move(ord);
    return s;
  }
  static SchedulerSpec alternating() {
    SchedulerSpec s;
    s.kind = Kind::alternating;
    return s;
  }
  static SchedulerSpec reverse_index() {
    SchedulerSpec s;
    s.kind = Kind::reverse_index;
    return s;
  }
  static SchedulerSpec random_fair(std::uint64_t seed, int horizon = 0) {
    SchedulerSpec s;
    s.kind = Kind::random_fair;
    s.seed = seed;
    s.fairness_horizon = horizon;
    return s;
  }
  static SchedulerSpec fixed(std::vector<int> moves, bool repeat) {
    SchedulerSpec s;
    s.kind = Kind::fixed_list;
    s.moves = std::move(moves);
    s.repeat = repeat;
    return s;
  }
};

struct SchedulerState {
  int pos = 0;
  SplitMix64 rng{0};
  std::vector<int> idle;  // steps since each seller last moved
  bool exhausted = false; // fixed_list without repeat ran out
};

inline SchedulerState init_scheduler(const SchedulerSpec& spec, int s) {
  SchedulerState st;
  st.rng = SplitMix64(spec.seed);
  st.idle.assign(s, 0);
  return st;
}

inline int scheduler_horizon(const SchedulerSpec& spec, int s) {
  return spec.fairness_horizon > 0 ? spec.fairness_horizon : 8 * s;
}

// Picks the mover for the next step and enforces the fairness horizon: the
// random scheduler is forced onto a starving seller, any other scheduler that
// starves one raises.
inline int next_mover(const SchedulerSpec& spec, SchedulerState& st, int s) {
  const int horizon = scheduler_horizon(spec, s);
  int mover = -1;
  switch (spec.kind) {
    case SchedulerSpec::Kind::round_robin: {
      const int period = spec.order.empty() ? s : static_cast<int>(spec.order.size());
      mover = spec.order.empty() ? st.pos : spec.order[st.pos];
      st.pos = (st.pos + 1) % period;
      break;
    }
    case SchedulerSpec::Kind::alternating:
      mover = st.pos;
      st.pos = (st.pos + 1) % s;
      break;
    case SchedulerSpec::Kind::reverse_index:
      mover = s - 1 - st.pos;
      st.pos = (st.pos + 1) % s;
      break;
    case SchedulerSpec::Kind::fixed_list: {
      if (spec.moves.empty()) throw SchedulerError("fixed scheduler without moves");
      if (st.pos >= static_cast<int>(spec.moves.size())) {
        if (!spec.repeat) {
          st.exhausted = true;
          return -1;
        }
        st.pos = 0;
      }
      mover = spec.moves[st.pos];
      ++st.pos;
      if (spec.repeat && st.pos >= static_cast<int>(spec.moves.size())) st.pos = 0;
      break;
    }
    case SchedulerSpec::Kind::random_fair: {
      // force the most-starved seller well before the horizon so the guard
      // below can only fire for schedulers that truly violate fairness
      for (int i = 0; i < s; ++i)
        if (st.idle[i] >= horizon - s && (mover < 0 || st.idle[i] > st.idle[mover])) mover = i;
      if (mover < 0) mover = static_cast<int>(st.rng.below(static_cast<std::uint64_t>(s)));
      break;
    }
  }
  if (mover < 0 || mover >= s) throw SchedulerError("scheduler produced an invalid seller");
  for (int i = 0; i < s; ++i) ++st.idle[i];
  st.idle[mover] = 0;
  for (int i = 0; i < s; ++i)
    if (st.idle[i] > horizon)
      throw SchedulerError("fairness horizon violated by seller " + std::to_string(i + 1));
  return mover;
}

struct TraceStep {
  int t = 0;
  int mover = 0;
  PriceProfile prices;  // canonical, after the move
  Purchase purchase;
  int quantity = 0;
  Money welfare = 0;
  std::vector<Money> revenue;
  std::vector<int> support_sizes;  // uncertain mode, after the update
  bool informative = false;
  std::vector<char> informative_per_seller;
};

struct CycleInfo {
  int prefix = 0;  // steps before the first recurring state
  int period = 0;
};

struct RoundSegmentation {
  std::vector<int> starts;  // r_0 = 0 < r_1 < ...
  int complete_rounds = 0;
  int tail_start = 0;      // first step not covered by a complete round
  bool unfair_prefix = false;
};

// Minimal-interval rounds: scan from the previous boundary until every seller
// has moved, the next boundary is one past that step.
inline RoundSegmentation segment_rounds(const std::vector<int>& moves, int s) {
  RoundSegmentation seg;
  seg.starts.push_back(0);
  std::vector<char> seen(s, 0);
  int covered = 0;
  for (int t = 0; t < static_cast<int>(moves.size()); ++t) {
    if (moves[t] < 0 || moves[t] >= s) throw std::invalid_argument("segment_rounds: bad mover");
    if (!seen[moves[t]]) {
      seen[moves[t]] = 1;
      ++covered;
    }
    if (covered == s) {
      seg.starts.push_back(t + 1);
      ++seg.complete_rounds;
      std::fill(seen.begin(), seen.end(), 0);
      covered = 0;
    }
  }
  seg.tail_start = seg.starts.back();
  seg.unfair_prefix = seg.complete_rounds == 0 && !moves.empty();
  return seg;
}

struct Trace {
  std::vector<TraceStep> steps;
  RoundSegmentation rounds;
  std::optional<CycleInfo> cycle;
  bool stopped_on_cycle = false;
  bool scheduler_exhausted = false;

  std::vector<int> movers() const {
    std::vector<int> m;
    m.reserve(steps.size());
    for (const auto& st : steps) m.push_back(st.mover);
    return m;
  }

  // smallest step index from which the given predicate holds forever,
  // accounting for the periodic tail when a cycle was confirmed
  template <typename Pred>
  int stable_from(Pred&& pred) const {
    int from = static_cast<int>(steps.size());
    if (cycle) {
      for (int t = cycle->prefix; t < cycle->prefix + cycle->period; ++t)
        if (!pred(steps[t])) return -1;  // violated infinitely often
      from = cycle->prefix;
    }
    while (from > 0 && pred(steps[from - 1])) --from;
    return from;
  }
};

struct RunOptions {
  int horizon_rounds = 0;     // 0 = derive a default
  bool stop_on_cycle = true;
  int max_steps = 2'000'000;  // hard safety stop
};

struct EngineState {
  PriceProfile prices;
  std::vector<Belief> beliefs;
  SchedulerState sched;
};

inline std::string state_key(const EngineState& st) {
  std::ostringstream os;
  for (const auto& v : st.prices) {
    for (Money q : v) os << q << ',';
    os << ';';
  }
  os << '|' << st.sched.pos << '|' << st.sched.rng.state << '|';
  for (int x : st.sched.idle) os << x << ',';
  os << '|';
  for (const auto& b : st.beliefs) {
    for (std::size_t j = 0; j < b.ids.size(); ++j)
      os << b.ids[j] << ':' << b.probs[j].num << '/' << b.probs[j].den << ',';
    os << ';';
  }
  return os.str();
}

// Memoizes best responses per (mover, opponent prices, mover belief); cycles
// revisit the same few states, so this collapses the per-step cost.
struct BrCache {
  std::map<std::string, std::vector<Money>> map;
};

namespace detail {

inline std::string br_key(const MarketInstance& inst, int mover, const EngineState& st) {
  std::ostringstream os;
  os << mover << '|';
  for (int j = 0; j < inst.seller_count(); ++j) {
    if (j == mover) continue;
    for (Money q : st.prices[j]) os << q << ',';
    os << ';';
  }
  if (inst.uncertain()) {
    const auto& b = st.beliefs[mover];
    for (std::size_t j = 0; j < b.ids.size(); ++j)
      os << b.ids[j] << ':' << b.probs[j].num << '/' << b.probs[j].den << ',';
  }
  return os.str();
}

}  // namespace detail

// One time-step: the scheduled seller replaces his prices with a best
// response, the buyer purchases, everyone observes and updates. Returns
// nullopt when a non-repeating scheduler ran out of moves.
inline std::optional<TraceStep> step(const MarketInstance& inst, const SchedulerSpec& spec,
                                     EngineState& st, int t, BrCache* cache = nullptr) {
  const int s = inst.seller_count();
  const int mover = next_mover(spec, st.sched, s);
  if (mover < 0) return std::nullopt;

  std::vector<Money> br;
  const std::string key = cache ? detail::br_key(inst, mover, st) : std::string();
  if (cache) {
    auto it = cache->map.find(key);
    if (it != cache->map.end()) br = it->second;
  }
  if (br.empty()) {
    if (inst.uncertain())
      br = best_response_uncertain(inst, mover, st.beliefs[mover], st.prices);
    else
      br = best_response(inst, mover, st.prices);
    if (cache) cache->map.emplace(key, br);
  }
  st.prices[mover] = br;
  canonicalize(inst, st.prices);

  TraceStep out;
  out.t = t;
  out.mover = mover;
  out.purchase = greedy_true(inst, st.prices);
  out.quantity = out.purchase.total;
  out.welfare = welfare_of(inst, inst.true_val(), out.purchase);
  out.revenue = revenues(inst, out.purchase, st.prices);

  if (inst.uncertain()) {
    const auto rep = classify_informative(inst, st.beliefs, st.prices);
    out.informative = rep.any;
    out.informative_per_seller = rep.seller_flags;
    for (int i = 0; i < s; ++i)
      st.beliefs[i] = bayes_update(inst, st.beliefs[i], st.prices, out.purchase);
    out.support_sizes.resize(s);
    for (int i = 0; i < s; ++i) out.support_sizes[i] = st.beliefs[i].support_size();
  }
  out.prices = st.prices;
  return out;
}

inline int default_horizon_rounds(const MarketInstance& inst) {
  std::int64_t rounds = 0;
  const int s = inst.seller_count();
  if (inst.uncertain()) {
    Money k_max = 0;
    std::int64_t supports = 0;
    for (const auto& b : inst.priors) {
      supports += b.support_size();
      for (int id : b.ids) k_max = std::max(k_max, inst.valuations.at(id).value_at(std::min(1, inst.valuations.at(id).n())));
    }
    rounds = static_cast<std::int64_t>(s) * k_max * supports;
  } else if (!inst.heterogeneous()) {
    rounds = static_cast<std::int64_t>(s) * inst.true_val().value_at(std::min(1, inst.true_val().n()));
  } else {
    rounds = 4 * static_cast<std::int64_t>(s) * (inst.grid.price_cap + 1);
  }
  return static_cast<int>(std::min<std::int64_t>(rounds, 100000)) + 10;
}

inline Trace run(const MarketInstance& inst, const SchedulerSpec& spec,
                 const PriceProfile& initial, RunOptions opts = {}) {
  const int s = inst.seller_count();
  const int horizon = opts.horizon_rounds > 0 ? opts.horizon_rounds : default_horizon_rounds(inst);

  EngineState st;
  st.prices = canonical_copy(inst, initial);
  if (inst.uncertain()) st.beliefs = inst.priors;
  st.sched = init_scheduler(spec, s);

  Trace trace;
  BrCache cache;
  std::map<std::string, int> seen;
  seen.emplace(state_key(st), 0);

  std::vector<char> seen_seller(s, 0);
  int covered = 0;
  trace.rounds.starts.push_back(0);

  int t = 0;
  while (t < opts.max_steps) {
    if (trace.rounds.complete_rounds >= horizon) break;
    auto ts = step(inst, spec, st, t, &cache);
    if (!ts) {
      trace.scheduler_exhausted = true;
      break;
    }
    trace.steps.push_back(std::move(*ts));
    const int mover = trace.steps.back().mover;
    if (!seen_seller[mover]) {
      seen_seller[mover] = 1;
      ++covered;
    }
    ++t;
    if (covered == s) {
      trace.rounds.starts.push_back(t);
      ++trace.rounds.complete_rounds;
      std::fill(seen_seller.begin(), seen_seller.end(), 0);
      covered = 0;
    }

    const std::string key = state_key(st);
    const auto it = seen.find(key);
    if (it != seen.end()) {
      CycleInfo cyc{it->second, t - it->second};
      // replay one period on scratch state and confirm the recurrence
      EngineState replay = st;
      bool ok = true;
      for (int j = 0; j < cyc.period && ok; ++j) {
        const auto& expect = trace.steps[cyc.prefix + j];
        const auto got = step(inst, spec, replay, 0, &cache);
        ok = got && got->mover == expect.mover && got->prices == expect.prices &&
             got->purchase == expect.purchase;
      }
      if (ok) {
        if (!trace.cycle) trace.cycle = cyc;
        if (opts.stop_on_cycle) {
          trace.stopped_on_cycle = true;
          break;
        }
      }
      seen.clear();  // keep scanning without re-reporting the same recurrence
    } else {
      seen.emplace(key, t);
    }
  }
  trace.rounds.tail_start = trace.rounds.starts.back();
  trace.rounds.unfair_prefix = trace.rounds.complete_rounds == 0 && !trace.steps.empty();
  return trace;
}

// ---------------------------------------------------------------------------
// Eventual welfare estimation
// ---------------------------------------------------------------------------

struct EwgReport {
  Money optimal_welfare = 0;
  int threshold_rounds = 0;
  Money min_post_threshold_welfare = 0;
  Rational empirical_alpha{1};
  double theorem_bound = 0.0;  // report-only, evaluated in floating point
  std::int64_t bad_round_budget = 0;   // uncertain mode
  std::int64_t bad_round_count = 0;    // uncertain mode, worst run
  int runs = 0;
  bool any_run_without_post_threshold_data = false;
};

inline int full_info_threshold_rounds(const MarketInstance& inst) {
  // s * v(1) / epsilon, with v(1) already in epsilon-units
  return static_cast<int>(inst.seller_count() * inst.true_val().value_at(1));
}

inline std::int64_t uncertain_round_budget(const MarketInstance& inst) {
  Money k_max = 0;
  std::int64_t supports = 0;
  for (const auto& b : inst.priors) {
    supports += b.support_size();
    for (int id : b.ids) k_max = std::max(k_max, inst.valuations.at(id).value_at(1));
  }
  return static_cast<std::int64_t>(inst.seller_count()) * k_max * supports;
}

inline double ewg_theorem_bound(const MarketInstance& inst) {
  const double n = inst.total_units();
  const double nm = inst.max_supply();
  if (inst.uncertain()) return n / (n - nm + 1);
  return 1.0 + std::log(n / (n - nm + 1));
}

// Welfare floor over all steps of round index >= threshold, treating a
// confirmed cycle as repeating forever. Returns nullopt when the trace ends
// before the threshold without a cycle.
inline std::optional<Money> min_welfare_from_round(const Trace& trace, int threshold_rounds) {
  std::optional<Money> best;
  const auto consider = [&](Money w) {
    if (!best || w < *best) best = w;
  };
  int from_step;
  if (threshold_rounds < static_cast<int>(trace.rounds.starts.size()))
    from_step = trace.rounds.starts[threshold_rounds];
  else if (trace.cycle)
    from_step = trace.cycle->prefix;  // only the periodic part recurs there
  else
    return std::nullopt;
  if (trace.cycle) {
    for (int t = trace.cycle->prefix; t < trace.cycle->prefix + trace.cycle->period; ++t)
      consider(trace.steps[t].welfare);
    for (int t = from_step; t < trace.cycle->prefix; ++t) consider(trace.steps[t].welfare);
  } else {
    for (int t = from_step; t < static_cast<int>(trace.steps.size()); ++t)
      consider(trace.steps[t].welfare);
  }
  if (!best) return std::nullopt;
  return best;
}

// Rounds whose minimum quantity drops below n - n_max + 1. When a cycle was
// confirmed and any step of the periodic part is bad, the count is infinite;
// INT64_MAX stands in for that.
inline std::int64_t count_bad_rounds(const MarketInstance& inst, const Trace& trace) {
  const int floor_qty = inst.total_units() - inst.max_supply() + 1;
  if (trace.cycle) {
    for (int t = trace.cycle->prefix; t < trace.cycle->prefix + trace.cycle->period; ++t)
      if (trace.steps[t].quantity < floor_qty) return INT64_MAX;
  }
  std::int64_t bad = 0;
  const auto& starts = trace.rounds.starts;
  for (std::size_t r = 0; r + 1 < starts.size(); ++r) {
    for (int t = starts[r]; t < starts[r + 1]; ++t)
      if (trace.steps[t].quantity < floor_qty) {
        ++bad;
        break;
      }
  }
  return bad;
}

struct EwgOptions {
  int random_schedules = 3;
  int random_initials = 2;
  int horizon_rounds = 0;
  std::uint64_t seed = 1;
};

inline std::vector<SchedulerSpec> schedule_family(int s, int random_schedules,
                                                  std::uint64_t seed) {
  std::vector<SchedulerSpec> fam;
  if (s <= 5) {
    std::vector<int> perm(s);
    for (int i = 0; i < s; ++i) perm[i] = i;
    do {
      fam.push_back(SchedulerSpec::round_robin_order(perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    fam.push_back(SchedulerSpec::alternating());
    fam.push_back(SchedulerSpec::reverse_index());
  }
  for (int j = 0; j < random_schedules; ++j)
    fam.push_back(SchedulerSpec::random_fair(seed + 1000003ull * (j + 1)));
  return fam;
}

inline PriceProfile random_profile(const MarketInstance& inst, SplitMix64& rng) {
  PriceProfile p(inst.seller_count());
  for (int i = 0; i < inst.seller_count(); ++i) {
    p[i].resize(inst.sellers[i].units());
    for (auto& q : p[i]) q = rng.range(0, inst.grid.price_cap);
  }
  canonicalize(inst, p);
  return p;
}

inline EwgReport estimate_ewg(const MarketInstance& inst, EwgOptions opts = {}) {
  if (inst.heterogeneous())
    throw std::invalid_argument("estimate_ewg: homogeneous instances only");
  EwgReport rep;
  rep.optimal_welfare = inst.true_val().value_at(inst.true_val().n());
  rep.theorem_bound = ewg_theorem_bound(inst);
  const bool uncertain = inst.uncertain();
  rep.threshold_rounds = uncertain ? 0 : full_info_threshold_rounds(inst);
  rep.bad_round_budget = uncertain ? uncertain_round_budget(inst) : 0;

  const int horizon = opts.horizon_rounds > 0
                          ? opts.horizon_rounds
                          : std::max<std::int64_t>(rep.threshold_rounds, rep.bad_round_budget) + 10;

  SplitMix64 rng(opts.seed);
  std::vector<PriceProfile> initials{cap_profile(inst)};
  for (int j = 0; j < opts.random_initials; ++j) initials.push_back(random_profile(inst, rng));

  std::optional<Money> min_w;
  for (const auto& sched : schedule_family(inst.seller_count(), opts.random_schedules, opts.seed))
    for (const auto& init : initials) {
      RunOptions ro;
      ro.horizon_rounds = horizon;
      const Trace trace = run(inst, sched, init, ro);
      ++rep.runs;
      if (uncertain) {
        rep.bad_round_count = std::max(rep.bad_round_count, count_bad_rounds(inst, trace));
        // welfare floor outside bad rounds
        const int floor_qty = inst.total_units() - inst.max_supply() + 1;
        for (const auto& stp : trace.steps)
          if (stp.quantity >= floor_qty && (!min_w || stp.welfare < *min_w)) min_w = stp.welfare;
      } else {
        const auto w = min_welfare_from_round(trace, rep.threshold_rounds);
        if (!w)
          rep.any_run_without_post_threshold_data = true;
        else if (!min_w || *w < *min_w)
          min_w = *w;
      }
    }
  if (min_w) rep.min_post_threshold_welfare = *min_w;
  if (rep.min_post_threshold_welfare > 0)
    rep.empirical_alpha = Rational(rep.optimal_welfare, rep.min_post_threshold_welfare);
  else
    rep.empirical_alpha = Rational(0);
  return rep;
}

}  // namespace pricewars
