#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pricewars/core.hpp"
#include "pricewars/demand.hpp"

namespace pricewars {

struct InconsistentObservation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Units a monopolist sells to a buyer holding n - n_i items already, i.e. the
// largest k maximizing k * m_{n - n_i + k}, ties toward larger k.
inline int monopolist_quantity(const Valuation& v, int n, int n_i) {
  Money best_rev = 0;
  int best_k = 0;
  for (int k = 1; k <= n_i; ++k) {
    const Money rev = static_cast<Money>(k) * v.marginal(n - n_i + k);
    if (rev >= best_rev) {
      best_rev = rev;
      best_k = k;
    }
  }
  return best_k;
}

// ---------------------------------------------------------------------------
// Homogeneous best responses
// ---------------------------------------------------------------------------

// One support valuation with its probability scaled to a common denominator,
// so expected revenues compare exactly as integers.
struct WeightedValuation {
  const Valuation* val;
  std::int64_t weight;
};

inline std::vector<WeightedValuation> singleton_support(const Valuation& v) {
  return {{&v, 1}};
}

inline std::vector<WeightedValuation> belief_support(const MarketInstance& inst,
                                                     const Belief& b) {
  std::int64_t common = 1;
  for (const auto& p : b.probs) common = lcm_i64(common, p.den);
  std::vector<WeightedValuation> out;
  out.reserve(b.ids.size());
  for (std::size_t j = 0; j < b.ids.size(); ++j)
    out.push_back({&inst.valuations.at(b.ids[j]), b.probs[j].num * (common / b.probs[j].den)});
  return out;
}

// Search context for one seller against fixed competitor prices.
struct HomogBrContext {
  int seller = 0;
  int n_i = 0;
  int n = 0;
  Money cap = 0;
  std::vector<UnitRef> comp;  // competitor units, visiting order
  std::vector<WeightedValuation> support;
  std::vector<Money> candidates;  // ascending, always contains 0 and cap
};

// Revenue of a price vector changes only where a unit price crosses a
// marginal of some support valuation or the visiting-order boundary of a
// competitor price; m+1 covers the cheapest never-selling price for exact
// lexicographic tie-breaks.
inline std::vector<Money> homog_candidates(Money cap,
                                           const std::vector<UnitRef>& comp,
                                           const std::vector<WeightedValuation>& support) {
  std::vector<Money> c{0, cap};
  for (const auto& sv : support)
    for (Money m : sv.val->marginals) {
      if (m <= cap) c.push_back(m);
      if (m + 1 <= cap) c.push_back(m + 1);
    }
  for (const auto& u : comp) {
    c.push_back(u.price);
    if (u.price > 0) c.push_back(u.price - 1);
  }
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

inline HomogBrContext make_homog_context(const MarketInstance& inst, int seller,
                                         const PriceProfile& profile,
                                         std::vector<WeightedValuation> support) {
  HomogBrContext ctx;
  ctx.seller = seller;
  ctx.n_i = inst.sellers[seller].units();
  ctx.n = inst.total_units();
  ctx.cap = inst.grid.price_cap;
  for (int j = 0; j < inst.seller_count(); ++j) {
    if (j == seller) continue;
    std::vector<Money> sorted = profile[j];
    std::sort(sorted.begin(), sorted.end());
    for (Money q : sorted) ctx.comp.push_back({q, j});
  }
  std::stable_sort(ctx.comp.begin(), ctx.comp.end(), [](const UnitRef& a, const UnitRef& b) {
    if (a.price != b.price) return a.price < b.price;
    return a.seller < b.seller;
  });
  ctx.support = std::move(support);
  ctx.candidates = homog_candidates(ctx.cap, ctx.comp, ctx.support);
  return ctx;
}

struct UniformOutcome {
  int own = 0;
  int total = 0;
};

inline UniformOutcome eval_uniform_one(const HomogBrContext& ctx, Money q, const Valuation& v) {
  UniformOutcome out;
  int mine_left = ctx.n_i;
  std::size_t ci = 0;
  while (true) {
    bool take_mine;
    if (mine_left > 0 && ci < ctx.comp.size()) {
      take_mine = q < ctx.comp[ci].price ||
                  (q == ctx.comp[ci].price && ctx.seller < ctx.comp[ci].seller);
    } else if (mine_left > 0) {
      take_mine = true;
    } else if (ci < ctx.comp.size()) {
      take_mine = false;
    } else {
      break;
    }
    const Money price = take_mine ? q : ctx.comp[ci].price;
    if (out.total >= v.n() || price > v.marginal(out.total + 1)) break;
    ++out.total;
    if (take_mine) {
      --mine_left;
      ++out.own;
    } else {
      ++ci;
    }
  }
  return out;
}

struct UniformStat {
  Money price = 0;
  __int128 exp_rev = 0;
  __int128 exp_own = 0;
  bool uninformative = true;  // equal total quantity across the support
};

inline UniformStat eval_uniform(const HomogBrContext& ctx, Money q) {
  UniformStat st;
  st.price = q;
  int first_total = -1;
  for (const auto& sv : ctx.support) {
    const auto o = eval_uniform_one(ctx, q, *sv.val);
    st.exp_rev += static_cast<__int128>(q) * o.own * sv.weight;
    st.exp_own += static_cast<__int128>(o.own) * sv.weight;
    if (first_total < 0)
      first_total = o.total;
    else if (o.total != first_total)
      st.uninformative = false;
  }
  return st;
}

// Best uniform price by (expected revenue, expected units sold, lower price);
// optionally restricted to uninformative prices.
inline std::optional<UniformStat> best_uniform(const HomogBrContext& ctx,
                                               bool require_uninformative,
                                               std::optional<__int128> require_rev = {}) {
  std::optional<UniformStat> best;
  for (Money q : ctx.candidates) {
    const auto st = eval_uniform(ctx, q);
    if (require_uninformative && !st.uninformative) continue;
    if (require_rev && st.exp_rev != *require_rev) continue;
    if (!best || st.exp_rev > best->exp_rev ||
        (st.exp_rev == best->exp_rev && st.exp_own > best->exp_own))
      best = st;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Exact DP over candidate price levels for vector-valued best responses.
//
// The seller's units, priced ascending from the candidate set, interleave
// with the fixed competitor units in the buyer's visiting order. Walking that
// order left to right, each support valuation is "alive" until its first
// prefix violation, so a bitmask of alive valuations plus the number of own
// units already placed fully determines the future. Expected revenue and
// expected own units accumulate additively, which makes the lexicographic
// (revenue, units) objective a valid DP value.
// ---------------------------------------------------------------------------

struct VectorBr {
  std::vector<Money> prices;  // ascending
  __int128 exp_rev = 0;
  __int128 exp_own = 0;
};

namespace detail {

struct DpVal {
  __int128 rev = -1;  // rev < 0 marks unreachable
  __int128 own = 0;
};

inline bool better(__int128 r1, __int128 o1, const DpVal& v2) {
  if (v2.rev < 0) return true;
  if (r1 != v2.rev) return r1 > v2.rev;
  return o1 > v2.own;
}

}  // namespace detail

inline VectorBr best_vector_response(const HomogBrContext& ctx) {
  const int c = static_cast<int>(ctx.candidates.size());
  const int m = static_cast<int>(ctx.support.size());
  if (m > 8) throw std::invalid_argument("best_vector_response: support too large");
  const int full = (1 << m) - 1;
  const int n_i = ctx.n_i;

  // comp_prefix[a]: competitor units visited before a unit of ours priced at
  // candidates[a]; cheaper, or equal-priced at a lexicographically smaller
  // seller.
  std::vector<int> comp_prefix(c + 1, 0);
  for (int a = 0; a < c; ++a) {
    const Money q = ctx.candidates[a];
    int cnt = 0;
    for (const auto& u : ctx.comp)
      if (u.price < q || (u.price == q && u.seller < ctx.seller)) ++cnt;
    comp_prefix[a] = cnt;
  }
  comp_prefix[c] = static_cast<int>(ctx.comp.size());

  std::vector<std::int64_t> wsum(1 << m, 0);
  for (int mask = 0; mask <= full; ++mask)
    for (int k = 0; k < m; ++k)
      if (mask & (1 << k)) wsum[mask] += ctx.support[k].weight;

  const auto marg = [&](int k, int pos) -> Money {
    // pos is 1-based; positions never exceed n by construction
    return ctx.support[k].val->marginal(pos);
  };

  // value[a][u][mask]: best suffix value entering level a with u own units
  // placed and comp units < comp_prefix[a] consumed.
  const auto idx = [&](int a, int u, int mask) { return (a * (n_i + 1) + u) * (full + 1) + mask; };
  std::vector<detail::DpVal> value((c + 1) * (n_i + 1) * (full + 1));
  for (int u = 0; u <= n_i; ++u)
    for (int mask = 0; mask <= full; ++mask)
      value[idx(c, u, mask)] = (u == n_i) ? detail::DpVal{0, 0} : detail::DpVal{-1, 0};

  // simulate placing x own units at price q from base position, then the
  // competitor units between this level and the next
  const auto advance = [&](int a, int u, int mask, int x, __int128& rev, __int128& own) -> int {
    const Money q = ctx.candidates[a];
    int pos = u + comp_prefix[a];
    for (int j = 0; j < x; ++j) {
      ++pos;
      int sell = 0;
      for (int k = 0; k < m; ++k)
        if ((mask & (1 << k)) && q <= marg(k, pos)) sell |= 1 << k;
      rev += static_cast<__int128>(q) * wsum[sell];
      own += wsum[sell];
      mask = sell;
    }
    for (int t = comp_prefix[a]; t < comp_prefix[a + 1]; ++t) {
      ++pos;
      int keep = 0;
      for (int k = 0; k < m; ++k)
        if ((mask & (1 << k)) && ctx.comp[t].price <= marg(k, pos)) keep |= 1 << k;
      mask = keep;
    }
    return mask;
  };

  for (int a = c - 1; a >= 0; --a)
    for (int u = n_i; u >= 0; --u)
      for (int mask = 0; mask <= full; ++mask) {
        detail::DpVal best;
        for (int x = 0; x + u <= n_i; ++x) {
          __int128 rev = 0, own = 0;
          const int mask2 = advance(a, u, mask, x, rev, own);
          const auto& nxt = value[idx(a + 1, u + x, mask2)];
          if (nxt.rev < 0) continue;
          if (detail::better(rev + nxt.rev, own + nxt.own, best))
            best = {rev + nxt.rev, own + nxt.own};
        }
        value[idx(a, u, mask)] = best;
      }

  // initial competitor units cheaper than candidate 0 (price 0) cannot exist,
  // so the start state is exact
  const auto& root = value[idx(0, 0, full)];
  VectorBr out;
  out.exp_rev = root.rev;
  out.exp_own = root.own;

  // reconstruct the lexicographically smallest ascending vector: prefer the
  // largest unit count at each level, low levels first
  int u = 0, mask = full;
  for (int a = 0; a < c && u < n_i; ++a) {
    for (int x = n_i - u; x >= 0; --x) {
      __int128 rev = 0, own = 0;
      const int mask2 = advance(a, u, mask, x, rev, own);
      const auto& nxt = value[idx(a + 1, u + x, mask2)];
      if (nxt.rev < 0) continue;
      if (rev + nxt.rev == value[idx(a, u, mask)].rev &&
          own + nxt.own == value[idx(a, u, mask)].own) {
        for (int j = 0; j < x; ++j) out.prices.push_back(ctx.candidates[a]);
        u += x;
        mask = mask2;
        break;
      }
    }
  }
  if (static_cast<int>(out.prices.size()) != n_i)
    throw std::logic_error("best_vector_response: reconstruction failed");
  return out;
}

// Full-information best response: uniform prices are without loss for a
// revenue maximizer, so scan the candidate prices and apply the tie cascade
// (more units sold, then lower price).
inline std::vector<Money> best_response_full_info(const MarketInstance& inst, int seller,
                                                  const PriceProfile& profile,
                                                  const Valuation& val) {
  const auto ctx = make_homog_context(inst, seller, profile, singleton_support(val));
  const auto best = best_uniform(ctx, false);
  return std::vector<Money>(ctx.n_i, best->price);
}

inline std::vector<Money> best_response_full_info(const MarketInstance& inst, int seller,
                                                  const PriceProfile& profile) {
  return best_response_full_info(inst, seller, profile, inst.true_val());
}

// Expected-revenue best response under a finite-support belief. Among exact
// maximizers: a uniform uninformative price if one attains the maximum (more
// expected units, then lower price), otherwise the vector optimum by expected
// units then lexicographic order.
inline std::vector<Money> best_response_uncertain(const MarketInstance& inst, int seller,
                                                  const Belief& belief,
                                                  const PriceProfile& profile) {
  const auto ctx = make_homog_context(inst, seller, profile, belief_support(inst, belief));
  const auto vec = best_vector_response(ctx);
  const auto uu = best_uniform(ctx, true, vec.exp_rev);
  if (uu) return std::vector<Money>(ctx.n_i, uu->price);
  return vec.prices;
}

// ---------------------------------------------------------------------------
// Heterogeneous best responses: per-item candidate prices in utility space,
// enumerated as multisets within equal-value item groups.
// ---------------------------------------------------------------------------

inline std::vector<Money> hetero_item_candidates(const MarketInstance& inst, int seller,
                                                 const PriceProfile& profile, Money value) {
  const Money cap = inst.grid.price_cap;
  std::vector<Money> c{0, cap};
  if (value <= cap) c.push_back(value);
  if (value + 1 <= cap) c.push_back(value + 1);
  for (int j = 0; j < inst.seller_count(); ++j) {
    if (j == seller) continue;
    const auto& vals = inst.sellers[j].item_values;
    for (int t = 0; t < static_cast<int>(vals.size()); ++t) {
      const Money u = vals[t] - profile[j][t];
      if (u < 0) continue;
      for (Money p : {value - u, value - u - 1})
        if (p >= 0 && p <= cap) c.push_back(p);
    }
  }
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

namespace detail {

// all non-decreasing index tuples of the given length
inline bool next_multiset(std::vector<int>& pick, int limit) {
  const int k = static_cast<int>(pick.size());
  for (int j = k - 1; j >= 0; --j) {
    if (pick[j] + 1 < limit) {
      const int v = pick[j] + 1;
      for (int t = j; t < k; ++t) pick[t] = v;
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline std::vector<Money> best_response_heterogeneous(const MarketInstance& inst, int seller,
                                                      const PriceProfile& profile) {
  const auto& values = inst.sellers[seller].item_values;
  const int n_i = static_cast<int>(values.size());

  struct Group {
    Money value;
    std::vector<int> items;
    std::vector<Money> candidates;
    std::vector<int> pick;
  };
  std::map<Money, std::vector<int>> by_value;
  for (int j = 0; j < n_i; ++j) by_value[values[j]].push_back(j);
  std::vector<Group> groups;
  for (auto& [v, items] : by_value)
    groups.push_back({v, items, hetero_item_candidates(inst, seller, profile, v), {}});
  for (auto& g : groups) g.pick.assign(g.items.size(), 0);

  PriceProfile work = profile;
  std::vector<Money> best_vec;
  Money best_rev = -1;
  int best_units = -1;

  const auto assemble = [&]() {
    for (const auto& g : groups)
      for (std::size_t t = 0; t < g.items.size(); ++t)
        work[seller][g.items[t]] = g.candidates[g.pick[t]];
  };

  while (true) {
    assemble();
    const auto x = greedy_k_additive(inst, work);
    Money rev = 0;
    for (int j : x.items[seller]) rev += work[seller][j];
    const int units = x.quantities[seller];
    bool take = false;
    if (rev > best_rev || (rev == best_rev && units > best_units))
      take = true;
    else if (rev == best_rev && units == best_units &&
             std::lexicographical_compare(work[seller].begin(), work[seller].end(),
                                          best_vec.begin(), best_vec.end()))
      take = true;
    if (take) {
      best_rev = rev;
      best_units = units;
      best_vec = work[seller];
    }
    // odometer across groups
    std::size_t g = 0;
    for (; g < groups.size(); ++g) {
      if (detail::next_multiset(groups[g].pick, static_cast<int>(groups[g].candidates.size())))
        break;
      std::fill(groups[g].pick.begin(), groups[g].pick.end(), 0);
    }
    if (g == groups.size()) break;
  }
  return best_vec;
}

// Generic dispatch used by the dynamics engine in full-information mode.
inline std::vector<Money> best_response(const MarketInstance& inst, int seller,
                                        const PriceProfile& profile) {
  if (inst.heterogeneous()) return best_response_heterogeneous(inst, seller, profile);
  return best_response_full_info(inst, seller, profile);
}

// ---------------------------------------------------------------------------
// Beliefs
// ---------------------------------------------------------------------------

// Posterior after observing the purchased set: keep exactly the support
// valuations that reproduce it (equal quantity, under the fixed tie rules),
// renormalized exactly.
inline Belief bayes_update(const MarketInstance& inst, const Belief& b,
                           const PriceProfile& profile, const Purchase& observed) {
  Belief out;
  Rational sum(0);
  for (std::size_t j = 0; j < b.ids.size(); ++j) {
    const int qty = greedy_quantity(inst, inst.valuations.at(b.ids[j]), profile);
    if (qty != observed.total) continue;
    out.ids.push_back(b.ids[j]);
    out.probs.push_back(b.probs[j]);
    sum = sum + b.probs[j];
  }
  if (out.ids.empty())
    throw InconsistentObservation("bayes_update: no support valuation reproduces the observation");
  for (auto& p : out.probs) p = p / sum;
  return out;
}

struct InformativeReport {
  std::vector<char> seller_flags;
  bool any = false;
};

// A price vector is informative for seller i when two valuations in his
// support would buy different quantities at it.
inline InformativeReport classify_informative(const MarketInstance& inst,
                                              const std::vector<Belief>& beliefs,
                                              const PriceProfile& profile) {
  InformativeReport rep;
  rep.seller_flags.assign(inst.seller_count(), 0);
  std::map<int, int> qty_cache;
  const auto qty_of = [&](int id) {
    auto it = qty_cache.find(id);
    if (it != qty_cache.end()) return it->second;
    const int q = greedy_quantity(inst, inst.valuations.at(id), profile);
    qty_cache.emplace(id, q);
    return q;
  };
  for (int i = 0; i < inst.seller_count(); ++i) {
    int first = -1;
    for (int id : beliefs[i].ids) {
      const int q = qty_of(id);
      if (first < 0) first = q;
      else if (q != first) {
        rep.seller_flags[i] = 1;
        rep.any = true;
        break;
      }
    }
  }
  return rep;
}

// Visiting order of sellers when every seller prices uniformly; nullopt when
// some seller does not.
inline std::optional<int> last_considered_seller(const MarketInstance& inst,
                                                 const PriceProfile& profile) {
  std::vector<std::pair<Money, int>> order;
  for (int i = 0; i < inst.seller_count(); ++i) {
    const auto& v = profile[i];
    for (Money q : v)
      if (q != v.front()) return std::nullopt;
    order.push_back({v.front(), i});
  }
  return std::max_element(order.begin(), order.end())->second;
}

}  // namespace pricewars
