#pragma once
// Shared fixtures and independent oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "coachme/error.hpp"
#include "coachme/knn.hpp"
#include "coachme/rng.hpp"
#include "coachme/time.hpp"

namespace testing {

using namespace coachme;

// The Error code thrown by f, or "" if it returns normally.
template <typename F>
std::string error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

inline Date day(const char* s) { return parse_date(s); }
inline Timestamp at(const char* s) { return parse_timestamp(s); }

// The scenario user: 40-year-old man, 1.80 m, 81 kg.
inline RawProfile john(const std::string& id = "john") {
  RawProfile r;
  r.user_id = id;
  r.age = 40;
  r.gender = Gender::Male;
  r.height_m = 1.80;
  r.weight_kg = 81.0;
  r.education = Education::Tertiary;
  r.health_condition = "prediabetes";
  r.preferred_activities = {"walking", "cycling"};
  r.preferred_foods = {"fish", "salad"};
  r.resources = {"kitchen", "park-nearby"};
  return r;
}

inline RawProfile random_profile(Rng& rng, const std::string& id) {
  static const std::vector<std::string> conditions{"none", "hypertension", "prediabetes", "type2-diabetes", "obesity"};
  static const std::vector<std::string> acts{"walking", "cycling", "yoga", "swimming", "hiking", "dancing"};
  static const std::vector<std::string> foods{"fish", "salad", "fruit", "soup", "nuts", "sweets"};
  RawProfile r;
  r.user_id = id;
  r.age = 18 + static_cast<int>(rng.index(60));
  r.gender = rng.bernoulli(0.5) ? Gender::Male : Gender::Female;
  r.height_m = std::round(rng.uniform(1.5, 1.95) * 100) / 100;
  r.weight_kg = std::round(rng.uniform(50, 120) * 10) / 10;
  r.education = static_cast<Education>(rng.index(4));
  r.health_condition = conditions[rng.index(conditions.size())];
  for (const auto& a : acts)
    if (rng.bernoulli(0.4)) r.preferred_activities.insert(a);
  for (const auto& f : foods)
    if (rng.bernoulli(0.4)) r.preferred_foods.insert(f);
  return r;
}

// Random vector over a small fixed mixed schema.
inline FeatureVector random_features(Rng& rng, int numeric = 3, int categorical = 2, int setvalued = 2) {
  static const char* cats[] = {"red", "green", "blue"};
  static const char* tags[] = {"a", "b", "c", "d", "e"};
  FeatureVector v;
  for (int i = 0; i < numeric; ++i) {
    // Coarse grid so exact distance ties happen and exercise the tie rule.
    const double x = rng.bernoulli(0.3) ? static_cast<double>(rng.index(5)) : rng.uniform(-50, 150);
    v.numeric.emplace_back("n" + std::to_string(i), x);
  }
  for (int i = 0; i < categorical; ++i) v.categorical.emplace_back("c" + std::to_string(i), cats[rng.index(3)]);
  for (int i = 0; i < setvalued; ++i) {
    TagSet s;
    for (const char* t : tags)
      if (rng.bernoulli(0.4)) s.insert(t);
    v.setvalued.emplace_back("s" + std::to_string(i), s);
  }
  return v;
}

struct OracleResult {
  std::string label;
  double confidence = 0;
  std::vector<std::int64_t> neighbors;
  bool cold = false;
};

// Exhaustive scan written from the definition, sharing no code with the
// library: per-field min/max over all instances, clamped range-normalized
// numeric difference, 0/1 categorical, Jaccard distance on sets, weighted
// mean; neighbors ordered by (distance, id); majority vote with ties going to
// the label of the nearest neighbor among the tied labels.
inline OracleResult oracle_knn(const std::vector<LabeledInstance>& train, const FeatureVector& q, int k,
                               const std::map<std::string, double>& weights, const std::string& fallback) {
  OracleResult out;
  if (train.empty()) {
    out.label = fallback;
    out.cold = true;
    return out;
  }
  auto w = [&](const std::string& name) {
    auto it = weights.find(name);
    return it == weights.end() ? 1.0 : it->second;
  };
  const std::size_t nn = q.numeric.size();
  std::vector<double> lo(nn), hi(nn);
  for (std::size_t f = 0; f < nn; ++f) {
    lo[f] = hi[f] = train[0].features.numeric[f].second;
    for (const auto& t : train) {
      lo[f] = std::min(lo[f], t.features.numeric[f].second);
      hi[f] = std::max(hi[f], t.features.numeric[f].second);
    }
  }
  std::vector<std::pair<double, std::int64_t>> all;
  for (const auto& t : train) {
    double num = 0, den = 0;
    for (std::size_t f = 0; f < nn; ++f) {
      const double wf = w(q.numeric[f].first);
      double d = 0;
      if (hi[f] > lo[f]) d = std::min(1.0, std::fabs(q.numeric[f].second - t.features.numeric[f].second) / (hi[f] - lo[f]));
      num += wf * d;
      den += wf;
    }
    for (std::size_t f = 0; f < q.categorical.size(); ++f) {
      const double wf = w(q.categorical[f].first);
      num += wf * (q.categorical[f].second == t.features.categorical[f].second ? 0.0 : 1.0);
      den += wf;
    }
    for (std::size_t f = 0; f < q.setvalued.size(); ++f) {
      const double wf = w(q.setvalued[f].first);
      const TagSet& a = q.setvalued[f].second;
      const TagSet& b = t.features.setvalued[f].second;
      double d = 0;
      if (!a.empty() || !b.empty()) {
        int inter = 0;
        for (const auto& x : a) inter += b.count(x) ? 1 : 0;
        const int uni = static_cast<int>(a.size() + b.size()) - inter;
        d = 1.0 - static_cast<double>(inter) / uni;
      }
      num += wf * d;
      den += wf;
    }
    all.emplace_back(num / den, t.instance_id);
  }
  std::sort(all.begin(), all.end());
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  std::map<std::string, int> votes;
  for (std::size_t i = 0; i < kk; ++i) {
    out.neighbors.push_back(all[i].second);
    ++votes[train[static_cast<std::size_t>(all[i].second - 1)].label];
  }
  int best = 0;
  for (const auto& [label, v] : votes) best = std::max(best, v);
  for (std::size_t i = 0; i < kk; ++i) {
    const auto& label = train[static_cast<std::size_t>(all[i].second - 1)].label;
    if (votes[label] == best) {
      out.label = label;
      break;
    }
  }
  out.confidence = static_cast<double>(best) / static_cast<double>(kk);
  return out;
}

}  // namespace testing
