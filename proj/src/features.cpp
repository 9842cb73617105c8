#include "coachme/features.hpp"

#include <array>

namespace coachme {

bool FeatureSchema::matches(const FeatureVector& v) const {
  if (v.numeric.size() != numeric.size() || v.categorical.size() != categorical.size() ||
      v.setvalued.size() != setvalued.size())
    return false;
  for (std::size_t i = 0; i < numeric.size(); ++i)
    if (v.numeric[i].first != numeric[i]) return false;
  for (std::size_t i = 0; i < categorical.size(); ++i)
    if (v.categorical[i].first != categorical[i]) return false;
  for (std::size_t i = 0; i < setvalued.size(); ++i)
    if (v.setvalued[i].first != setvalued[i]) return false;
  return true;
}

FeatureSchema schema_of(const FeatureVector& v) {
  FeatureSchema s;
  for (const auto& f : v.numeric) s.numeric.push_back(f.first);
  for (const auto& f : v.categorical) s.categorical.push_back(f.first);
  for (const auto& f : v.setvalued) s.setvalued.push_back(f.first);
  return s;
}

FeatureSchema profile_schema() {
  return {{"age", "bmi", "height_m", "weight_kg", "education"},
          {"gender", "health_condition"},
          {"preferred_activities", "preferred_foods"}};
}

FeatureSchema performance_schema() {
  FeatureSchema s = profile_schema();
  for (const char* name : {"compliance_score", "trend_slope", "report_count", "has_emotion", "happy_fraction",
                           "sad_fraction", "angry_fraction", "neutral_fraction"})
    s.numeric.emplace_back(name);
  return s;
}

FeatureVector encode_profile(const UserProfile& p) {
  FeatureVector v;
  v.numeric = {{"age", static_cast<double>(p.age)},
               {"bmi", p.bmi},
               {"height_m", p.height_m},
               {"weight_kg", p.weight_kg},
               {"education", static_cast<double>(static_cast<int>(p.education))}};
  v.categorical = {{"gender", std::string(to_string(p.gender))}, {"health_condition", p.health_condition}};
  v.setvalued = {{"preferred_activities", p.preferred_activities}, {"preferred_foods", p.preferred_foods}};
  return v;
}

FeatureVector encode_performance(const UserProfile& profile, const ComplianceWindow& window,
                                 std::span<const EmotionReport> emotions) {
  FeatureVector v = encode_profile(profile);
  const double score = compliance_score(window).value_or(0.0);
  double slope = 0.0;
  try {
    slope = trend(window).slope;
  } catch (const std::exception&) {
    // fewer than two scored days: no direction signal
  }
  v.numeric.emplace_back("compliance_score", score);
  v.numeric.emplace_back("trend_slope", slope);
  v.numeric.emplace_back("report_count", static_cast<double>(window.report_count));

  const auto recent = emotions.size() > kEmotionWindow ? emotions.last(kEmotionWindow) : emotions;
  std::array<int, 4> counts{};
  for (const auto& e : recent) ++counts[static_cast<std::size_t>(e.emotion)];
  const double total = static_cast<double>(recent.size());
  v.numeric.emplace_back("has_emotion", recent.empty() ? 0.0 : 1.0);
  const char* names[] = {"happy_fraction", "sad_fraction", "angry_fraction", "neutral_fraction"};
  for (std::size_t i = 0; i < counts.size(); ++i)
    v.numeric.emplace_back(names[i], recent.empty() ? 0.0 : counts[i] / total);
  return v;
}

}  // namespace coachme
