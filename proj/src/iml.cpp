#include "coachme/iml.hpp"

#include "coachme/error.hpp"

namespace coachme {

std::string_view to_string(ModelKind m) { return m == ModelKind::Pre ? "pre" : "post"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "pre") return ModelKind::Pre;
  if (s == "post") return ModelKind::Post;
  throw Error("ValidationError", "unknown model kind: " + std::string(s));
}

ModelRegistry ModelRegistry::create(const ImlConfig& cfg) {
  return ModelRegistry{
      KnnModel(kProfileSchemaId, profile_schema(), cfg.default_template, cfg.k, cfg.pre_weights),
      KnnModel(kPerformanceSchemaId, performance_schema(), std::string(to_string(cfg.default_type)), cfg.k,
               cfg.post_weights)};
}

FeatureVector performance_features(const UserHistoryView& user, Date as_of, const AdherenceConfig& cfg) {
  const ComplianceWindow window =
      build_window(user.profile->user_id, user.plans, user.reports, as_of, cfg.window_days);
  // Only emotions reported up to the end of as_of.
  const Timestamp cutoff = Timestamp{as_of + std::chrono::days{1}};
  std::size_t n = 0;
  while (n < user.emotions.size() && user.emotions[n].reported_at < cutoff) ++n;
  return encode_performance(*user.profile, window, user.emotions.first(n));
}

Prediction pre_predict(const ModelRegistry& registry, const UserProfile& profile) {
  return registry.pre.predict(encode_profile(profile));
}

Prediction post_predict(const ModelRegistry& registry, const UserHistoryView& user, Date as_of,
                        const AdherenceConfig& cfg) {
  return registry.post.predict(performance_features(user, as_of, cfg));
}

std::vector<ModelLabel> record_refinement(const UserHistoryView& user, const std::string& refined_template_id,
                                          Date as_of, Timestamp now, const AdherenceConfig& cfg) {
  if (user.plans.empty()) throw Error("NoAssignedPlan", "user " + user.profile->user_id + " has no plan");
  if (refined_template_id.empty()) throw Error("ValidationError", "refined template id is empty");
  const ComplianceWindow window =
      build_window(user.profile->user_id, user.plans, user.reports, as_of, cfg.window_days);
  const UserType observed = ground_truth_type(compliance_score(window), cfg);

  std::vector<ModelLabel> labels;
  labels.push_back({ModelKind::Pre, user.profile->user_id, encode_profile(*user.profile), refined_template_id,
                    InstanceSource::CaregiverRefinement, now});
  labels.push_back({ModelKind::Post, user.profile->user_id, performance_features(user, as_of, cfg),
                    std::string(to_string(observed)), InstanceSource::CaregiverRefinement, now});
  return labels;
}

std::int64_t apply_label(ModelRegistry& registry, const ModelLabel& label) {
  KnnModel& model = label.model == ModelKind::Pre ? registry.pre : registry.post;
  return model.add(label.features, label.label, label.source, label.created_at);
}

}  // namespace coachme
