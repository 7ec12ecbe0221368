#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "pricewars/core.hpp"

namespace pricewars {

// One unit in the buyer's visiting order: cheapest first, ties to the
// lexicographically smaller seller, within a seller cheapest unit first.
struct UnitRef {
  Money price;
  int seller;
};

inline std::vector<UnitRef> merged_units(const MarketInstance& inst, const PriceProfile& p) {
  std::vector<UnitRef> all;
  all.reserve(inst.total_units());
  for (int i = 0; i < inst.seller_count(); ++i) {
    std::vector<Money> sorted = p[i];
    std::sort(sorted.begin(), sorted.end());
    for (Money q : sorted) all.push_back({q, i});
  }
  std::stable_sort(all.begin(), all.end(), [](const UnitRef& a, const UnitRef& b) {
    if (a.price != b.price) return a.price < b.price;
    return a.seller < b.seller;
  });
  return all;
}

// Buyer for identical goods: walk units in visiting order and buy while the
// q-th cheapest unit costs no more than the q-th marginal (zero-utility
// units are bought).
inline Purchase greedy_homogeneous(const MarketInstance& inst, const Valuation& v,
                                   const PriceProfile& p) {
  const auto units = merged_units(inst, p);
  Purchase out;
  out.quantities.assign(inst.seller_count(), 0);
  out.items.assign(inst.seller_count(), {});
  const int n = v.n();
  for (int t = 0; t < static_cast<int>(units.size()); ++t) {
    if (t >= n || units[t].price > v.marginal(t + 1)) break;
    ++out.quantities[units[t].seller];
    ++out.total;
  }
  return out;
}

inline int greedy_quantity(const MarketInstance& inst, const Valuation& v,
                           const PriceProfile& p) {
  return greedy_homogeneous(inst, v, p).total;
}

// Buyer for distinct goods, value of a bundle = sum of its k most valuable
// items. Marginal utilities are constant below size k, so the greedy is a
// single sort: utility descending, then seller, then price descending (the
// buyer prefers the most expensive item), then item index.
inline Purchase greedy_k_additive(const MarketInstance& inst, const PriceProfile& p) {
  struct Entry {
    Money utility;
    int seller;
    Money price;
    int item;
  };
  std::vector<Entry> entries;
  for (int i = 0; i < inst.seller_count(); ++i) {
    const auto& vals = inst.sellers[i].item_values;
    for (int j = 0; j < static_cast<int>(vals.size()); ++j)
      entries.push_back({vals[j] - p[i][j], i, p[i][j], j});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.utility != b.utility) return a.utility > b.utility;
    if (a.seller != b.seller) return a.seller < b.seller;
    if (a.price != b.price) return a.price > b.price;
    return a.item < b.item;
  });

  Purchase out;
  out.quantities.assign(inst.seller_count(), 0);
  out.items.assign(inst.seller_count(), {});
  for (const auto& e : entries) {
    if (out.total >= inst.buyer.k || e.utility < 0) break;
    ++out.quantities[e.seller];
    out.items[e.seller].push_back(e.item);
    ++out.total;
  }
  for (auto& v : out.items) std::sort(v.begin(), v.end());
  return out;
}

inline Purchase greedy(const MarketInstance& inst, const Valuation& v, const PriceProfile& p) {
  if (inst.heterogeneous()) return greedy_k_additive(inst, p);
  return greedy_homogeneous(inst, v, p);
}

inline Purchase greedy_true(const MarketInstance& inst, const PriceProfile& p) {
  return greedy(inst, inst.true_val(), p);
}

inline void check_feasible(const MarketInstance& inst, const Purchase& x) {
  if (static_cast<int>(x.quantities.size()) != inst.seller_count())
    throw std::invalid_argument("purchase: wrong seller count");
  int total = 0;
  for (int i = 0; i < inst.seller_count(); ++i) {
    if (x.quantities[i] < 0 || x.quantities[i] > inst.sellers[i].units())
      throw std::invalid_argument("purchase: quantity exceeds supply");
    if (inst.heterogeneous()) {
      if (static_cast<int>(x.items[i].size()) != x.quantities[i])
        throw std::invalid_argument("purchase: item list does not match quantity");
      for (int j : x.items[i])
        if (j < 0 || j >= inst.sellers[i].units())
          throw std::invalid_argument("purchase: item index out of range");
    }
    total += x.quantities[i];
  }
  if (total != x.total) throw std::invalid_argument("purchase: total mismatch");
  if (inst.heterogeneous() && x.total > inst.buyer.k)
    throw std::invalid_argument("purchase: exceeds buyer capacity k");
}

// Payment per seller. Homogeneous sellers sell their cheapest units first, so
// the payment is the prefix sum of the sorted price vector.
inline std::vector<Money> revenues(const MarketInstance& inst, const Purchase& x,
                                   const PriceProfile& p) {
  std::vector<Money> rev(inst.seller_count(), 0);
  for (int i = 0; i < inst.seller_count(); ++i) {
    if (inst.sellers[i].heterogeneous()) {
      for (int j : x.items[i]) rev[i] += p[i][j];
    } else {
      std::vector<Money> sorted = p[i];
      std::sort(sorted.begin(), sorted.end());
      for (int t = 0; t < x.quantities[i]; ++t) rev[i] += sorted[t];
    }
  }
  return rev;
}

inline Money welfare_of(const MarketInstance& inst, const Valuation& v, const Purchase& x) {
  if (!inst.heterogeneous()) return v.value_at(x.total);
  Money w = 0;
  for (int i = 0; i < inst.seller_count(); ++i)
    for (int j : x.items[i]) w += inst.sellers[i].item_values[j];
  return w;
}

// Total value of the purchase minus total payment; signed.
inline Money buyer_utility(const MarketInstance& inst, const Purchase& x,
                           const PriceProfile& p) {
  check_feasible(inst, x);
  const auto rev = revenues(inst, x, p);
  Money paid = 0;
  for (Money r : rev) paid += r;
  return welfare_of(inst, inst.true_val(), x) - paid;
}

}  // namespace pricewars
