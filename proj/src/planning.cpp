#include "coachme/planning.hpp"

#include <algorithm>
#include <cmath>

#include "coachme/error.hpp"
#include "coachme/rng.hpp"

namespace coachme {

PlanTemplate baseline_template(const std::string& id, int slots_per_day) {
  PlanTemplate t;
  t.template_id = id;
  // Spread S slots over the three kinds, Diet first.
  for (int i = 0; i < slots_per_day; ++i) ++t.kind_mix[kAllKinds[i % 3]];
  t.notes = "balanced default";
  return t;
}

std::vector<ActivityKind> slot_kinds(const PlanTemplate& tpl) {
  std::vector<ActivityKind> kinds;
  for (ActivityKind k : kAllKinds) {
    auto it = tpl.kind_mix.find(k);
    if (it == tpl.kind_mix.end()) continue;
    for (int i = 0; i < it->second; ++i) kinds.push_back(k);
  }
  return kinds;
}

void validate_template(const PlanTemplate& tpl, int slots_per_day, const std::vector<ActivityCluster>& confirmed) {
  if (tpl.template_id.empty()) throw Error("ValidationError", "template id is empty");
  int sum = 0;
  for (const auto& [kind, n] : tpl.kind_mix) {
    if (n < 0) throw Error("ValidationError", "negative slot count in template " + tpl.template_id);
    sum += n;
  }
  if (sum != slots_per_day)
    throw Error("ValidationError", "template " + tpl.template_id + " fills " + std::to_string(sum) + " of " +
                                       std::to_string(slots_per_day) + " daily slots");
  for (const auto& c : tpl.target_clusters) {
    const bool ok = std::any_of(confirmed.begin(), confirmed.end(),
                                [&](const ActivityCluster& ac) { return ac.cluster_id == c && ac.confirmed; });
    if (!ok) throw Error("ValidationError", "template " + tpl.template_id + " targets unconfirmed cluster " + c);
  }
}

double jaccard_similarity(const TagSet& a, const TagSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::vector<ActivityCluster> propose_clusters(const ActivityPool& pool, double threshold) {
  struct Group {
    std::vector<std::string> members;  // sorted; members.front() is the group's key
  };
  std::vector<const Activity*> acts;
  for (const auto& [id, a] : pool) acts.push_back(&a);
  const std::size_t n = acts.size();

  std::vector<Group> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[i].members = {acts[i]->activity_id};
  // link[i][j]: sum of member-pair similarities between groups i and j.
  std::vector<std::vector<double>> link(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) link[i][j] = link[j][i] = jaccard_similarity(acts[i]->tags, acts[j]->tags);

  // Groups stay sorted by key, so (i < j) enumerates pairs in ascending id order.
  while (groups.size() > 1) {
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        const double avg = link[i][j] / static_cast<double>(groups[i].members.size() * groups[j].members.size());
        if (avg > best) {
          best = avg;
          bi = i;
          bj = j;
        }
      }
    }
    if (best < threshold) break;
    // Fold bj into bi; bi keeps the smaller key.
    auto& dst = groups[bi].members;
    dst.insert(dst.end(), groups[bj].members.begin(), groups[bj].members.end());
    std::sort(dst.begin(), dst.end());
    for (std::size_t m = 0; m < groups.size(); ++m) {
      link[bi][m] += link[bj][m];
      link[m][bi] = link[bi][m];
    }
    link[bi][bi] = 0.0;
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
    link.erase(link.begin() + static_cast<std::ptrdiff_t>(bj));
    for (auto& row : link) row.erase(row.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  std::vector<ActivityCluster> out;
  for (const auto& g : groups)
    out.push_back({"cl-" + g.members.front(), std::set<std::string>(g.members.begin(), g.members.end()), false});
  return out;
}

std::vector<ActivityCluster> confirm_clusters(std::vector<ActivityCluster> clusters,
                                              const std::vector<ClusterEdit>& edits, const ActivityPool& pool) {
  auto find = [&](const std::string& id) {
    return std::find_if(clusters.begin(), clusters.end(), [&](const ActivityCluster& c) { return c.cluster_id == id; });
  };
  auto require = [&](const std::string& id) {
    auto it = find(id);
    if (it == clusters.end()) throw Error("ValidationError", "unknown cluster " + id);
    return it;
  };
  for (const auto& edit : edits) {
    for (const auto& a : edit.activity_ids)
      if (!pool.contains(a)) throw Error("UnknownActivity", a);
    switch (edit.op) {
      case ClusterEdit::Op::Move: {
        for (const auto& a : edit.activity_ids)
          for (auto& c : clusters) c.member_ids.erase(a);
        auto it = find(edit.cluster_id);
        if (it == clusters.end()) {
          clusters.push_back({edit.cluster_id, {}, false});
          it = std::prev(clusters.end());
        }
        it->member_ids.insert(edit.activity_ids.begin(), edit.activity_ids.end());
        break;
      }
      case ClusterEdit::Op::Merge: {
        auto src_members = require(edit.other_cluster_id)->member_ids;
        require(edit.cluster_id)->member_ids.insert(src_members.begin(), src_members.end());
        clusters.erase(require(edit.other_cluster_id));
        break;
      }
      case ClusterEdit::Op::Split: {
        auto src = require(edit.cluster_id);
        if (edit.other_cluster_id.empty() || find(edit.other_cluster_id) != clusters.end())
          throw Error("ValidationError", "split needs a fresh cluster id");
        ActivityCluster fresh{edit.other_cluster_id, {}, false};
        for (const auto& a : edit.activity_ids) {
          if (src->member_ids.erase(a) == 0) throw Error("ValidationError", a + " is not in " + edit.cluster_id);
          fresh.member_ids.insert(a);
        }
        clusters.push_back(std::move(fresh));
        break;
      }
      case ClusterEdit::Op::Assign: {
        auto it = find(edit.cluster_id);
        if (it == clusters.end()) {
          clusters.push_back({edit.cluster_id, {}, false});
          it = std::prev(clusters.end());
        }
        it->member_ids = std::set<std::string>(edit.activity_ids.begin(), edit.activity_ids.end());
        break;
      }
    }
  }
  std::erase_if(clusters, [](const ActivityCluster& c) { return c.member_ids.empty(); });
  std::set<std::string> seen;
  for (auto& c : clusters) {
    for (const auto& a : c.member_ids)
      if (!seen.insert(a).second) throw Error("OverlapViolation", a + " appears in more than one cluster");
    c.confirmed = true;
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const ActivityCluster& a, const ActivityCluster& b) { return a.cluster_id < b.cluster_id; });
  return clusters;
}

bool feasible(const Activity& activity, const UserProfile& profile, const FrequencyTable& freq) {
  if (freq.is_frequent(activity.activity_id)) return true;
  return std::includes(profile.resources.begin(), profile.resources.end(), activity.required_resources.begin(),
                       activity.required_resources.end());
}

int frequent_quota(const PlanningConfig& cfg) {
  // Ceiling with a tolerance so exact products (0.5 * 14) are not bumped up.
  const double raw = cfg.frequent_share * kDaysPerPlan * cfg.slots_per_day;
  const double floor_raw = std::floor(raw);
  return static_cast<int>(raw - floor_raw > 1e-9 ? floor_raw + 1 : floor_raw);
}

Plan compose_weekly_plan(const std::string& plan_id, const UserProfile& profile, const PlanTemplate& tpl,
                         const ActivityPool& pool, const std::vector<ActivityCluster>& clusters,
                         const FrequencyTable& freq, Date week_start, std::uint64_t seed, const PlanningConfig& cfg) {
  validate_template(tpl, cfg.slots_per_day, clusters);
  const std::vector<ActivityKind> kinds = slot_kinds(tpl);

  std::set<std::string> targeted;
  for (const auto& c : clusters)
    if (tpl.target_clusters.contains(c.cluster_id)) targeted.insert(c.member_ids.begin(), c.member_ids.end());

  std::map<ActivityKind, std::vector<std::string>> frequent, infrequent;
  for (const auto& [id, a] : pool) {
    if (!feasible(a, profile, freq)) continue;
    if (freq.is_frequent(id))
      frequent[a.kind].push_back(id);
    else if (tpl.target_clusters.empty() || targeted.contains(id))
      infrequent[a.kind].push_back(id);
  }
  for (ActivityKind k : kinds)
    if (frequent[k].empty() && infrequent[k].empty())
      throw Error("NoFeasibleActivity", std::string(to_string(k)));

  Rng rng(seed);
  const std::size_t total = kinds.size() * kDaysPerPlan;
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < total; ++i)
    if (!frequent[kinds[i % kinds.size()]].empty()) eligible.push_back(i);
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(frequent_quota(cfg)), eligible.size());
  // Partial Fisher-Yates: the first `want` entries become Frequent slots.
  for (std::size_t i = 0; i < want; ++i) std::swap(eligible[i], eligible[i + rng.index(eligible.size() - i)]);
  std::vector<bool> use_frequent(total, false);
  for (std::size_t i = 0; i < want; ++i) use_frequent[eligible[i]] = true;

  std::vector<PlanSlot> slots;
  slots.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const ActivityKind kind = kinds[i % kinds.size()];
    const auto& freq_arm = frequent[kind];
    const auto& new_arm = infrequent[kind];
    PlanSlot slot;
    slot.date = week_start + std::chrono::days{static_cast<int>(i / kinds.size())};
    slot.slot_index = static_cast<int>(i % kinds.size());
    if (use_frequent[i] || new_arm.empty()) {
      slot.activity_id = freq_arm[rng.index(freq_arm.size())];
      slot.origin = SlotOrigin::Frequent;
    } else {
      slot.activity_id = new_arm[rng.index(new_arm.size())];
      slot.origin = SlotOrigin::Infrequent;
    }
    slots.push_back(std::move(slot));
  }
  return new_plan(plan_id, profile.user_id, tpl.template_id, week_start, std::move(slots), pool, cfg.slots_per_day);
}

std::string_view to_string(SuggestionRationale r) {
  return r == SuggestionRationale::FrequentHabit ? "FrequentHabit" : "NewBehavior";
}

std::vector<Suggestion> generate_suggestions(const UserProfile& profile, const ActivityPool& pool,
                                             const FrequencyTable& freq, int n, std::uint64_t seed, double epsilon,
                                             Timestamp now) {
  if (n < 1) throw Error("ValidationError", "n must be at least 1");
  std::vector<std::string> habits, fresh;
  for (const auto& [id, a] : pool) {
    if (!feasible(a, profile, freq)) continue;
    (freq.is_frequent(id) ? habits : fresh).push_back(id);
  }
  if (habits.empty() && fresh.empty()) throw Error("NoFeasibleActivity", "no feasible activity for " + profile.user_id);

  Rng rng(seed);
  std::vector<Suggestion> out;
  for (int i = 0; i < n && !(habits.empty() && fresh.empty()); ++i) {
    const bool explore = rng.uniform() < epsilon;
    const bool use_fresh = explore ? !fresh.empty() : habits.empty();
    auto& arm = use_fresh ? fresh : habits;
    const std::size_t pick = rng.index(arm.size());
    out.push_back({profile.user_id, arm[pick],
                   use_fresh ? SuggestionRationale::NewBehavior : SuggestionRationale::FrequentHabit, now});
    arm[pick] = std::move(arm.back());
    arm.pop_back();
  }
  return out;
}

}  // namespace coachme
