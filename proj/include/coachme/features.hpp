#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coachme/adherence.hpp"
#include "coachme/domain.hpp"

namespace coachme {

// Mixed-type feature vector. Field order is fixed by the schema that produced
// it; two vectors are comparable only if their field names line up exactly.
struct FeatureVector {
  std::vector<std::pair<std::string, double>> numeric;
  std::vector<std::pair<std::string, std::string>> categorical;
  std::vector<std::pair<std::string, TagSet>> setvalued;

  bool operator==(const FeatureVector&) const = default;
};

struct FeatureSchema {
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;
  std::vector<std::string> setvalued;

  std::size_t field_count() const { return numeric.size() + categorical.size() + setvalued.size(); }
  bool matches(const FeatureVector& v) const;
  bool operator==(const FeatureSchema&) const = default;
};

FeatureSchema schema_of(const FeatureVector& v);

inline constexpr const char* kProfileSchemaId = "profile-v1";
inline constexpr const char* kPerformanceSchemaId = "performance-v1";
inline constexpr int kEmotionWindow = 7;

FeatureSchema profile_schema();
FeatureSchema performance_schema();

FeatureVector encode_profile(const UserProfile& profile);

// Extends encode_profile with compliance score, trend slope, report count,
// has_emotion flag and the four emotion fractions over the last seven
// emotion reports. `emotions` must be in report order.
FeatureVector encode_performance(const UserProfile& profile, const ComplianceWindow& window,
                                 std::span<const EmotionReport> emotions);

}  // namespace coachme
