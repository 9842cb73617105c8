#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coachme/features.hpp"
#include "coachme/time.hpp"

namespace coachme {

struct NormField {
  std::string name;
  double min = 0;
  double max = 0;
  bool degenerate = true;  // min == max: field contributes zero distance

  bool operator==(const NormField&) const = default;
};

// Per numeric field min/max observed over the training instances.
struct NormStats {
  std::vector<NormField> fields;

  bool operator==(const NormStats&) const = default;
};

enum class InstanceSource { CaregiverAssignment, CaregiverRefinement, Simulated };
std::string_view to_string(InstanceSource s);
InstanceSource parse_instance_source(std::string_view s);

struct LabeledInstance {
  std::int64_t instance_id = 0;
  FeatureVector features;
  std::string label;
  InstanceSource source = InstanceSource::Simulated;
  Timestamp created_at;

  bool operator==(const LabeledInstance&) const = default;
};

enum class PredictionStatus { Ok, ColdStart };
std::string_view to_string(PredictionStatus s);

struct Prediction {
  std::string label;
  double confidence = 0;  // winning votes / k'
  std::vector<std::int64_t> neighbor_ids;  // nearest first
  PredictionStatus status = PredictionStatus::ColdStart;

  bool operator==(const Prediction&) const = default;
};

using FieldWeights = std::map<std::string, double>;  // absent fields weigh 1.0

// Throws EmptyTrainingSet.
NormStats fit_normalizer(std::span<const LabeledInstance> instances);

// Gower-style mixed distance in [0, 1]. Throws SchemaMismatch.
double distance(const FeatureVector& a, const FeatureVector& b, const NormStats& norm,
                const FieldWeights& weights = {});

// Instance-based classifier with an append-only training set. Normalization
// is kept equal to fit_normalizer(instances) after every add.
class KnnModel {
 public:
  KnnModel(std::string schema_id, FeatureSchema schema, std::string default_label, int k = 5,
           FieldWeights weights = {});

  const std::string& schema_id() const { return schema_id_; }
  const FeatureSchema& schema() const { return schema_; }
  const std::string& default_label() const { return default_label_; }
  int k() const { return k_; }
  const FieldWeights& weights() const { return weights_; }
  const NormStats& norm() const { return norm_; }
  const std::vector<LabeledInstance>& instances() const { return instances_; }
  std::uint64_t version() const { return version_; }
  std::size_t size() const { return instances_.size(); }

  // Appends one instance and returns its id. Throws SchemaMismatch, ValidationError.
  std::int64_t add(FeatureVector features, std::string label, InstanceSource source, Timestamp created_at);

  Prediction predict(const FeatureVector& query) const;

  // Resolved weight per field in numeric, categorical, setvalued order.
  const std::vector<double>& resolved_weights() const { return resolved_; }

  bool operator==(const KnnModel&) const = default;

 private:
  std::string schema_id_;
  FeatureSchema schema_;
  std::string default_label_;
  int k_;
  FieldWeights weights_;
  std::vector<double> resolved_;
  double weight_sum_ = 0;
  NormStats norm_;
  std::vector<LabeledInstance> instances_;
  std::uint64_t version_ = 0;
};

Prediction knn_predict(const KnnModel& model, const FeatureVector& query);

// Copying form of KnnModel::add; the argument is left untouched.
KnnModel add_labeled_instance(const KnnModel& model, FeatureVector features, std::string label,
                              InstanceSource source, Timestamp created_at);

nlohmann::json export_model(const KnnModel& model);
KnnModel import_model(const nlohmann::json& doc);

nlohmann::json features_to_json(const FeatureVector& v);
FeatureVector features_from_json(const nlohmann::json& j);

}  // namespace coachme
