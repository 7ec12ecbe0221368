#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pricewars/rational.hpp"

namespace pricewars {

// All prices, values and revenues are integer counts of the monetary unit
// epsilon = 1/denom. Arithmetic on them is exact by construction.
using Money = std::int64_t;

struct GridSpec {
  std::int64_t denom = 1;  // epsilon = 1/denom currency units
  Money price_cap = 0;     // sentinel price: a unit at the cap never sells
};

// Weakly decreasing marginal values m_1 >= ... >= m_n, with cached prefix
// sums so value_at is O(1).
struct Valuation {
  std::vector<Money> marginals;
  std::vector<Money> prefix;  // prefix[q] = m_1 + ... + m_q, prefix[0] = 0

  Valuation() = default;
  explicit Valuation(std::vector<Money> m) : marginals(std::move(m)) {
    prefix.resize(marginals.size() + 1, 0);
    for (std::size_t j = 0; j < marginals.size(); ++j) prefix[j + 1] = prefix[j] + marginals[j];
  }

  int n() const { return static_cast<int>(marginals.size()); }

  Money marginal(int k) const {  // 1-based
    if (k < 1 || k > n()) throw std::out_of_range("valuation: marginal index");
    return marginals[k - 1];
  }

  Money value_at(int q) const {
    if (q < 0 || q > n()) throw std::out_of_range("valuation: quantity out of range");
    return prefix[q];
  }

  // v(extra | held) = v(held + extra) - v(held)
  Money conditional_value(int extra, int held) const {
    if (extra < 0 || held < 0 || extra + held > n())
      throw std::out_of_range("valuation: conditional quantity out of range");
    return prefix[held + extra] - prefix[held];
  }

  bool non_increasing() const {
    for (std::size_t j = 1; j < marginals.size(); ++j)
      if (marginals[j] > marginals[j - 1]) return false;
    return true;
  }
};

struct SellerSpec {
  int supply = 0;                    // homogeneous mode
  std::vector<Money> item_values;    // heterogeneous mode
  bool heterogeneous() const { return !item_values.empty(); }
  int units() const { return heterogeneous() ? static_cast<int>(item_values.size()) : supply; }
};

struct BuyerModel {
  enum class Kind { homogeneous, k_additive };
  Kind kind = Kind::homogeneous;
  Valuation valuation;  // homogeneous
  int k = 0;            // k_additive
};

// Finite-support probability distribution over the valuation universe of a
// MarketInstance. Entries are kept sorted by valuation id.
struct Belief {
  std::vector<int> ids;
  std::vector<Rational> probs;

  int support_size() const { return static_cast<int>(ids.size()); }
  bool contains(int id) const { return std::find(ids.begin(), ids.end(), id) != ids.end(); }
  Rational prob_of(int id) const {
    for (std::size_t j = 0; j < ids.size(); ++j)
      if (ids[j] == id) return probs[j];
    return Rational(0);
  }
  friend bool operator==(const Belief& a, const Belief& b) {
    return a.ids == b.ids && a.probs == b.probs;
  }
};

struct MarketInstance {
  GridSpec grid;
  std::vector<SellerSpec> sellers;
  BuyerModel buyer;

  // Uncertain-demand mode. Empty priors means full information.
  std::vector<Valuation> valuations;         // universe referenced by beliefs
  std::vector<std::string> valuation_names;  // parallel to valuations, for io
  int true_valuation = -1;                   // index into valuations
  std::vector<Belief> priors;                // one per seller when uncertain

  int seller_count() const { return static_cast<int>(sellers.size()); }
  bool uncertain() const { return !priors.empty(); }
  bool heterogeneous() const { return buyer.kind == BuyerModel::Kind::k_additive; }

  int total_units() const {
    int n = 0;
    for (const auto& s : sellers) n += s.units();
    return n;
  }
  int max_supply() const {
    int m = 0;
    for (const auto& s : sellers) m = std::max(m, s.units());
    return m;
  }

  const Valuation& true_val() const {
    if (uncertain()) return valuations.at(true_valuation);
    return buyer.valuation;
  }
};

// Per seller, one price per unit/item, in epsilon-units. Homogeneous sellers
// keep their vector sorted non-decreasing (canonical form); heterogeneous
// prices stay attached to their item, canonical only within equal-value runs.
using PriceProfile = std::vector<std::vector<Money>>;

inline void canonicalize(const MarketInstance& inst, PriceProfile& p) {
  for (int i = 0; i < inst.seller_count(); ++i) {
    auto& v = p[i];
    if (!inst.sellers[i].heterogeneous()) {
      std::sort(v.begin(), v.end());
      continue;
    }
    // group item positions by value, sort prices ascending within each group
    std::map<Money, std::vector<int>> groups;
    const auto& vals = inst.sellers[i].item_values;
    for (int j = 0; j < static_cast<int>(vals.size()); ++j) groups[vals[j]].push_back(j);
    for (auto& [val, pos] : groups) {
      std::vector<Money> pr;
      pr.reserve(pos.size());
      for (int j : pos) pr.push_back(v[j]);
      std::sort(pr.begin(), pr.end());
      for (std::size_t t = 0; t < pos.size(); ++t) v[pos[t]] = pr[t];
    }
  }
}

inline PriceProfile canonical_copy(const MarketInstance& inst, PriceProfile p) {
  canonicalize(inst, p);
  return p;
}

inline PriceProfile uniform_profile(const MarketInstance& inst, Money price) {
  PriceProfile p(inst.seller_count());
  for (int i = 0; i < inst.seller_count(); ++i)
    p[i].assign(inst.sellers[i].units(), price);
  return p;
}

inline PriceProfile cap_profile(const MarketInstance& inst) {
  return uniform_profile(inst, inst.grid.price_cap);
}

// What the buyer took in one time-step: per-seller counts, and for
// heterogeneous sellers the item indices.
struct Purchase {
  std::vector<int> quantities;
  std::vector<std::vector<int>> items;  // empty vectors in homogeneous mode
  int total = 0;

  friend bool operator==(const Purchase& a, const Purchase& b) {
    return a.total == b.total && a.quantities == b.quantities && a.items == b.items;
  }
  friend bool operator!=(const Purchase& a, const Purchase& b) { return !(a == b); }
};

inline std::vector<std::string> validate_instance(const MarketInstance& inst) {
  std::vector<std::string> bad;
  if (inst.grid.denom < 1) bad.push_back("grid denom must be >= 1");
  if (inst.sellers.empty()) bad.push_back("no sellers");
  Money max_val = 0;

  bool any_hetero = false, any_homog = false;
  for (int i = 0; i < inst.seller_count(); ++i) {
    const auto& s = inst.sellers[i];
    if (s.heterogeneous()) {
      any_hetero = true;
      for (Money v : s.item_values) {
        if (v < 0) bad.push_back("seller " + std::to_string(i + 1) + ": negative item value");
        max_val = std::max(max_val, v);
      }
    } else {
      any_homog = true;
      if (s.supply < 1) bad.push_back("seller " + std::to_string(i + 1) + ": supply must be >= 1");
    }
  }

  if (inst.buyer.kind == BuyerModel::Kind::homogeneous) {
    if (any_hetero) bad.push_back("homogeneous buyer with heterogeneous sellers");
    const auto& v = inst.buyer.valuation;
    if (!inst.uncertain() || !v.marginals.empty()) {
      if (v.n() != inst.total_units())
        bad.push_back("marginals length must equal total supply");
      if (!v.non_increasing()) bad.push_back("marginals not non-increasing");
      for (Money m : v.marginals) {
        if (m < 0) bad.push_back("negative marginal");
        max_val = std::max(max_val, m);
      }
    }
  } else {
    if (any_homog) bad.push_back("k-additive buyer requires item_values for every seller");
    if (inst.buyer.k < 1) bad.push_back("buyer k must be >= 1");
    if (inst.uncertain()) bad.push_back("uncertain mode requires a homogeneous buyer");
  }

  if (inst.uncertain()) {
    if (static_cast<int>(inst.priors.size()) != inst.seller_count())
      bad.push_back("priors must list one belief per seller");
    if (inst.true_valuation < 0 || inst.true_valuation >= static_cast<int>(inst.valuations.size()))
      bad.push_back("true valuation missing from the valuation universe");
    for (std::size_t k = 0; k < inst.valuations.size(); ++k) {
      const auto& v = inst.valuations[k];
      if (v.n() != inst.total_units())
        bad.push_back("valuation " + std::to_string(k) + ": length must equal total supply");
      if (!v.non_increasing())
        bad.push_back("valuation " + std::to_string(k) + ": marginals not non-increasing");
      for (Money m : v.marginals) max_val = std::max(max_val, m);
    }
    for (int i = 0; i < static_cast<int>(inst.priors.size()); ++i) {
      const auto& b = inst.priors[i];
      if (b.ids.empty()) {
        bad.push_back("seller " + std::to_string(i + 1) + ": empty belief support");
        continue;
      }
      Rational sum(0);
      bool ok = true;
      for (std::size_t j = 0; j < b.ids.size(); ++j) {
        if (b.ids[j] < 0 || b.ids[j] >= static_cast<int>(inst.valuations.size())) {
          bad.push_back("seller " + std::to_string(i + 1) + ": belief references unknown valuation");
          ok = false;
          break;
        }
        if (!b.probs[j].positive()) {
          bad.push_back("seller " + std::to_string(i + 1) + ": non-positive prior probability");
          ok = false;
        }
        sum = sum + b.probs[j];
      }
      if (ok && sum != Rational(1))
        bad.push_back("seller " + std::to_string(i + 1) + ": prior probabilities sum to " + sum.str());
      if (ok && inst.true_valuation >= 0 && !b.contains(inst.true_valuation))
        bad.push_back("seller " + std::to_string(i + 1) + ": inconsistent prior (true valuation has zero probability)");
    }
  }

  if (inst.grid.price_cap < max_val + 1)
    bad.push_back("price_cap must exceed every marginal and item value");
  return bad;
}

inline Money default_price_cap(Money max_value) { return max_value + 1; }

}  // namespace pricewars
