#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coachme/adherence.hpp"
#include "coachme/domain.hpp"

namespace coachme {

struct PlanningConfig {
  int slots_per_day = kDefaultSlotsPerDay;
  double frequent_share = 0.7;  // lower bound on Frequent slots per week
  double epsilon = 0.3;         // exploration rate for suggestions
  double cluster_threshold = 0.5;
};

struct PlanTemplate {
  std::string template_id;
  std::map<ActivityKind, int> kind_mix;  // slots per day for each kind
  std::set<std::string> target_clusters;  // empty: whole pool
  std::string notes;

  bool operator==(const PlanTemplate&) const = default;
};

// Baseline template used when the pre-model has nothing to go on.
PlanTemplate baseline_template(const std::string& id = "baseline-v1", int slots_per_day = kDefaultSlotsPerDay);

// Per-day slot kinds in slot_index order: Diet first, then Physical, then Wellness.
std::vector<ActivityKind> slot_kinds(const PlanTemplate& tpl);

// Throws ValidationError if the mix does not sum to slots_per_day or a target
// cluster is not among `confirmed`.
void validate_template(const PlanTemplate& tpl, int slots_per_day, const std::vector<ActivityCluster>& confirmed);

double jaccard_similarity(const TagSet& a, const TagSet& b);

// Average-linkage agglomerative clustering over tag-set Jaccard similarity.
// Clusters are named "cl-<smallest member id>".
std::vector<ActivityCluster> propose_clusters(const ActivityPool& pool, double threshold = 0.5);

struct ClusterEdit {
  enum class Op { Move, Merge, Split, Assign };
  Op op = Op::Move;
  std::string cluster_id;                 // Move: destination; Merge: target; Split/Assign: subject
  std::string other_cluster_id;           // Merge: source folded into cluster_id; Split: new cluster id
  std::vector<std::string> activity_ids;  // Move/Split/Assign
};

// Applies caregiver edits in order and marks the result confirmed.
// Throws UnknownActivity, ValidationError, OverlapViolation.
std::vector<ActivityCluster> confirm_clusters(std::vector<ActivityCluster> proposed,
                                              const std::vector<ClusterEdit>& edits, const ActivityPool& pool);

// Resources are available, or the user has done it often enough that the
// skill can be assumed.
bool feasible(const Activity& activity, const UserProfile& profile, const FrequencyTable& freq);

// Fills 7 x S slots. Throws NoFeasibleActivity naming the kind.
Plan compose_weekly_plan(const std::string& plan_id, const UserProfile& profile, const PlanTemplate& tpl,
                         const ActivityPool& pool, const std::vector<ActivityCluster>& clusters,
                         const FrequencyTable& freq, Date week_start, std::uint64_t seed,
                         const PlanningConfig& cfg = {});

// Lower bound on Frequent slots per week: ceil(frequent_share * 7 * S).
int frequent_quota(const PlanningConfig& cfg);

enum class SuggestionRationale { FrequentHabit, NewBehavior };
std::string_view to_string(SuggestionRationale r);

struct Suggestion {
  std::string user_id;
  std::string activity_id;
  SuggestionRationale rationale = SuggestionRationale::FrequentHabit;
  Timestamp created_at;

  bool operator==(const Suggestion&) const = default;
};

// Epsilon-greedy over the frequent (exploit) and infrequent (explore) feasible
// arms, uniform within an arm, no repeats in one batch. Returns fewer than n
// when the feasible pool runs out. Throws NoFeasibleActivity.
std::vector<Suggestion> generate_suggestions(const UserProfile& profile, const ActivityPool& pool,
                                             const FrequencyTable& freq, int n, std::uint64_t seed, double epsilon,
                                             Timestamp now);

}  // namespace coachme
