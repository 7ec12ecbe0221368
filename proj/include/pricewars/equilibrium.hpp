#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pricewars/core.hpp"
#include "pricewars/demand.hpp"
#include "pricewars/response.hpp"

namespace pricewars {

struct SizeGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Deviation {
  Money revenue = 0;
  std::vector<Money> prices;
};

// Highest revenue seller i can reach against the rest of the profile. For
// identical goods the optimum is attained at a uniform price; for distinct
// goods the pruned per-item search applies. Both are oracle-validated in the
// test suite.
inline Deviation best_deviation(const MarketInstance& inst, int seller,
                                const PriceProfile& profile) {
  Deviation d;
  if (inst.heterogeneous()) {
    d.prices = best_response_heterogeneous(inst, seller, profile);
    PriceProfile work = profile;
    work[seller] = d.prices;
    const auto x = greedy_k_additive(inst, work);
    for (int j : x.items[seller]) d.revenue += work[seller][j];
  } else {
    const auto ctx = make_homog_context(inst, seller, profile, singleton_support(inst.true_val()));
    const auto best = best_uniform(ctx, false);
    d.prices.assign(ctx.n_i, best->price);
    d.revenue = static_cast<Money>(best->exp_rev);
  }
  return d;
}

inline Money current_revenue(const MarketInstance& inst, const PriceProfile& profile, int seller) {
  const auto x = greedy_true(inst, profile);
  return revenues(inst, x, profile)[seller];
}

// (best achievable revenue) - (current revenue); never negative.
inline Money deviation_gain(const MarketInstance& inst, const PriceProfile& profile, int seller) {
  return best_deviation(inst, seller, profile).revenue - current_revenue(inst, profile, seller);
}

struct RejectedWitness {
  PriceProfile profile;
  int seller = 0;
  std::vector<Money> deviation;
  Money gain = 0;
};

struct NashResult {
  std::vector<PriceProfile> nash;
  std::vector<RejectedWitness> witnesses;
  std::int64_t profiles_searched = 0;
  std::int64_t witnesses_total = 0;
};

namespace detail {

// non-decreasing price tuples of length k over {0..cap}
struct MultisetOdometer {
  std::vector<Money> prices;
  Money cap;
  bool done = false;

  MultisetOdometer(int k, Money cap_) : prices(k, 0), cap(cap_) {}

  bool advance() {
    for (int j = static_cast<int>(prices.size()) - 1; j >= 0; --j) {
      if (prices[j] < cap) {
        const Money v = prices[j] + 1;
        for (int t = j; t < static_cast<int>(prices.size()); ++t) prices[t] = v;
        return true;
      }
    }
    done = true;
    return false;
  }
};

inline std::int64_t multiset_count(std::int64_t values, std::int64_t k) {
  // C(values + k - 1, k), saturating
  __int128 r = 1;
  for (std::int64_t j = 1; j <= k; ++j) {
    r = r * (values - 1 + j) / j;
    if (r > INT64_MAX) return INT64_MAX;
  }
  return static_cast<std::int64_t>(r);
}

inline std::string opp_key(const PriceProfile& profile, int seller) {
  std::ostringstream os;
  for (std::size_t j = 0; j < profile.size(); ++j) {
    if (static_cast<int>(j) == seller) continue;
    for (Money q : profile[j]) os << q << ',';
    os << ';';
  }
  return os.str();
}

}  // namespace detail

struct NashOptions {
  std::int64_t guard = 10'000'000;
  std::int64_t witness_limit = 1000;
};

// Exhaustive scan of canonical profiles (per-seller price multisets; for
// distinct goods, multisets within equal-value item groups). A profile is
// kept when no seller has a positive deviation gain.
inline NashResult enumerate_pure_nash(const MarketInstance& inst, NashOptions opts = {}) {
  const int s = inst.seller_count();
  const Money cap = inst.grid.price_cap;

  std::int64_t space = 1;
  for (int i = 0; i < s; ++i) {
    // per equal-value group for heterogeneous sellers, one multiset per seller otherwise
    if (inst.sellers[i].heterogeneous()) {
      std::map<Money, int> group_sizes;
      for (Money v : inst.sellers[i].item_values) ++group_sizes[v];
      for (const auto& [v, k] : group_sizes) {
        const std::int64_t c = detail::multiset_count(cap + 1, k);
        space = space > opts.guard / std::max<std::int64_t>(c, 1) ? INT64_MAX : space * c;
      }
    } else {
      const std::int64_t c = detail::multiset_count(cap + 1, inst.sellers[i].units());
      space = space > opts.guard / std::max<std::int64_t>(c, 1) ? INT64_MAX : space * c;
    }
    if (space > opts.guard)
      throw SizeGuardError("nash enumeration space exceeds guard (" + std::to_string(opts.guard) +
                           " profiles)");
  }

  // odometers: one per homogeneous seller, one per value-group otherwise
  struct Slot {
    int seller;
    std::vector<int> items;  // positions receiving the multiset (ascending)
    detail::MultisetOdometer odo;
  };
  std::vector<Slot> slots;
  for (int i = 0; i < s; ++i) {
    if (inst.sellers[i].heterogeneous()) {
      std::map<Money, std::vector<int>> groups;
      const auto& vals = inst.sellers[i].item_values;
      for (int j = 0; j < static_cast<int>(vals.size()); ++j) groups[vals[j]].push_back(j);
      for (auto& [v, items] : groups)
        slots.push_back({i, items, detail::MultisetOdometer(static_cast<int>(items.size()), cap)});
    } else {
      std::vector<int> items(inst.sellers[i].units());
      for (int j = 0; j < static_cast<int>(items.size()); ++j) items[j] = j;
      slots.push_back({i, items, detail::MultisetOdometer(static_cast<int>(items.size()), cap)});
    }
  }

  PriceProfile profile(s);
  for (int i = 0; i < s; ++i) profile[i].assign(inst.sellers[i].units(), 0);

  NashResult res;
  std::vector<std::map<std::string, Deviation>> dev_cache(s);

  while (true) {
    for (const auto& sl : slots)
      for (std::size_t t = 0; t < sl.items.size(); ++t)
        profile[sl.seller][sl.items[t]] = sl.odo.prices[t];

    ++res.profiles_searched;
    const auto x = greedy_true(inst, profile);
    const auto rev = revenues(inst, x, profile);
    bool is_nash = true;
    for (int i = 0; i < s && is_nash; ++i) {
      const std::string key = detail::opp_key(profile, i);
      auto& cache = dev_cache[i];
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, best_deviation(inst, i, profile)).first;
      if (it->second.revenue > rev[i]) {
        is_nash = false;
        ++res.witnesses_total;
        if (static_cast<std::int64_t>(res.witnesses.size()) < opts.witness_limit)
          res.witnesses.push_back(
              {profile, i, it->second.prices, it->second.revenue - rev[i]});
      }
    }
    if (is_nash) res.nash.push_back(profile);

    std::size_t g = 0;
    for (; g < slots.size(); ++g) {
      if (slots[g].odo.advance()) break;
      std::fill(slots[g].odo.prices.begin(), slots[g].odo.prices.end(), 0);
    }
    if (g == slots.size()) break;
  }
  return res;
}

// Either no pure equilibrium exists, or the unique one prices every unit at
// the last marginal and sells everything. Requires epsilon < m_n / (4n).
struct NeStructureReport {
  bool applies = false;
  std::string skip_reason;
  bool holds = false;
  std::int64_t nash_count = 0;
  bool efficient_profile_present = false;
};

inline NeStructureReport check_ne_structure(const MarketInstance& inst, NashOptions opts = {}) {
  NeStructureReport rep;
  if (inst.heterogeneous()) {
    rep.skip_reason = "homogeneous instances only";
    return rep;
  }
  const auto& v = inst.true_val();
  const int n = v.n();
  const Money m_n = v.marginal(n);
  if (inst.seller_count() < 2 || m_n <= 0) {
    rep.skip_reason = "needs at least two sellers and a positive last marginal";
    return rep;
  }
  if (m_n <= 4 * static_cast<Money>(n)) {  // epsilon < m_n/(4n) in unit terms
    rep.skip_reason = "grid too coarse: requires m_n > 4n epsilon";
    return rep;
  }
  rep.applies = true;

  const auto res = enumerate_pure_nash(inst, opts);
  rep.nash_count = static_cast<std::int64_t>(res.nash.size());
  const PriceProfile efficient = uniform_profile(inst, m_n);
  rep.holds = true;
  for (const auto& p : res.nash) {
    if (p != efficient || greedy_true(inst, p).total != n) rep.holds = false;
  }
  if (rep.nash_count > 1) rep.holds = false;
  for (const auto& p : res.nash)
    if (p == efficient) rep.efficient_profile_present = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Constructed equilibria for distinct goods
// ---------------------------------------------------------------------------

// Additive buyer (k >= total items): every item priced exactly at its value;
// the zero-utility rule makes the buyer take everything.
inline PriceProfile construct_additive_ne(const MarketInstance& inst) {
  if (!inst.heterogeneous() || inst.buyer.k < inst.total_units())
    throw std::invalid_argument("construct_additive_ne: needs k >= total items");
  PriceProfile p(inst.seller_count());
  for (int i = 0; i < inst.seller_count(); ++i) p[i] = inst.sellers[i].item_values;
  return p;
}

// Unit-demand buyer (k = 1). The lexicographically least holder of a top item
// extracts v_max - v_2; everyone else prices at zero. When a seller ahead of
// him in the tie order also offers utility v_2, he leaves one extra unit of
// utility on the table to keep the sale.
inline PriceProfile construct_unit_demand_ne(const MarketInstance& inst) {
  if (!inst.heterogeneous() || inst.buyer.k != 1)
    throw std::invalid_argument("construct_unit_demand_ne: needs k = 1");
  Money v_max = -1;
  int holder = -1;
  for (int i = 0; i < inst.seller_count(); ++i)
    for (Money v : inst.sellers[i].item_values)
      if (v > v_max) {
        v_max = v;
        holder = i;
      }
  Money v2 = 0;
  for (int i = 0; i < inst.seller_count(); ++i) {
    if (i == holder) continue;
    for (Money v : inst.sellers[i].item_values) v2 = std::max(v2, v);
  }
  bool blocked = false;  // a lex-smaller seller would win the tie at utility v2
  for (int i = 0; i < holder && !blocked; ++i)
    for (Money v : inst.sellers[i].item_values)
      if (v == v2) blocked = true;

  Money price = v_max - v2;
  if (blocked && price > 0) price -= 1;
  PriceProfile p(inst.seller_count());
  for (int i = 0; i < inst.seller_count(); ++i)
    p[i].assign(inst.sellers[i].units(), i == holder ? price : 0);
  return p;
}

// Greedy top-k by value with the buyer's tie rules; the welfare benchmark for
// equilibria with a k-additive buyer.
inline Money optimal_welfare_k_additive(const MarketInstance& inst) {
  std::vector<Money> vals;
  for (const auto& s : inst.sellers)
    for (Money v : s.item_values) vals.push_back(v);
  std::sort(vals.begin(), vals.end(), std::greater<Money>());
  Money w = 0;
  for (int j = 0; j < std::min<int>(inst.buyer.k, static_cast<int>(vals.size())); ++j)
    w += vals[j];
  return w;
}

struct KAdditiveWelfareReport {
  Money opt = 0;
  Money min_value = 0;
  std::int64_t nash_checked = 0;
  bool additive_bound_holds = true;         // welfare >= OPT - 2k epsilon
  bool ratio_bound_applies = false;         // r = min value/epsilon > 2
  bool ratio_bound_holds = true;            // welfare * r >= OPT * (r - 2)
};

inline KAdditiveWelfareReport check_k_additive_welfare(const MarketInstance& inst,
                                                       const std::vector<PriceProfile>& nash) {
  if (!inst.heterogeneous())
    throw std::invalid_argument("check_k_additive_welfare: heterogeneous instances only");
  KAdditiveWelfareReport rep;
  rep.opt = optimal_welfare_k_additive(inst);
  rep.min_value = INT64_MAX;
  for (const auto& s : inst.sellers)
    for (Money v : s.item_values) rep.min_value = std::min(rep.min_value, v);
  if (rep.min_value == INT64_MAX) rep.min_value = 0;
  const Money r = rep.min_value;
  rep.ratio_bound_applies = r > 2;

  for (const auto& p : nash) {
    ++rep.nash_checked;
    const Money w = welfare_of(inst, inst.true_val(), greedy_true(inst, p));
    if (w < rep.opt - 2 * static_cast<Money>(inst.buyer.k)) rep.additive_bound_holds = false;
    if (rep.ratio_bound_applies && w * r < rep.opt * (r - 2)) rep.ratio_bound_holds = false;
  }
  return rep;
}

}  // namespace pricewars
