#pragma once

#include <span>
#include <string>
#include <vector>

#include "coachme/adherence.hpp"
#include "coachme/knn.hpp"

namespace coachme {

struct ImlConfig {
  int k = 5;
  FieldWeights pre_weights;
  // User type is a judgment about adherence, so the score dominates.
  FieldWeights post_weights{{"compliance_score", 5.0}};
  std::string default_template = "baseline-v1";
  UserType default_type = UserType::Neutral;
  AdherenceConfig adherence;
};

enum class ModelKind { Pre, Post };
std::string_view to_string(ModelKind m);
ModelKind parse_model_kind(std::string_view s);

// The two classifiers: profile -> plan template, and profile + performance
// -> user type.
struct ModelRegistry {
  KnnModel pre;
  KnnModel post;

  static ModelRegistry create(const ImlConfig& cfg);
  bool operator==(const ModelRegistry&) const = default;
};

// Everything the engine needs to know about one user. Plans are in
// assignment order; reports and emotions in report order.
struct UserHistoryView {
  const UserProfile* profile = nullptr;
  std::span<const Plan* const> plans;
  std::span<const ComplianceReport> reports;
  std::span<const EmotionReport> emotions;
};

// A single labeled example bound for one of the models. Persisted as a
// ModelLabelAdded event and replayed through apply_label.
struct ModelLabel {
  ModelKind model = ModelKind::Pre;
  std::string user_id;
  FeatureVector features;
  std::string label;
  InstanceSource source = InstanceSource::CaregiverAssignment;
  Timestamp created_at;

  bool operator==(const ModelLabel&) const = default;
};

FeatureVector performance_features(const UserHistoryView& user, Date as_of, const AdherenceConfig& cfg = {});

Prediction pre_predict(const ModelRegistry& registry, const UserProfile& profile);
Prediction post_predict(const ModelRegistry& registry, const UserHistoryView& user, Date as_of,
                        const AdherenceConfig& cfg = {});

// The caregiver's refinement is the label source for both models: the refined
// template labels the profile, and the observed window's user type labels the
// performance vector. Throws NoAssignedPlan.
std::vector<ModelLabel> record_refinement(const UserHistoryView& user, const std::string& refined_template_id,
                                          Date as_of, Timestamp now, const AdherenceConfig& cfg = {});

// Returns the new instance id.
std::int64_t apply_label(ModelRegistry& registry, const ModelLabel& label);

}  // namespace coachme
