#include "coachme/knn.hpp"

#include <algorithm>
#include <cmath>

#include "coachme/error.hpp"

namespace coachme {

namespace {

constexpr int kModelFormatVersion = 1;

double jaccard_distance(const TagSet& a, const TagSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return 1.0 - static_cast<double>(common) / static_cast<double>(uni);
}

double numeric_term(double a, double b, const NormField& f) {
  if (f.degenerate) return 0.0;
  return std::min(1.0, std::fabs(a - b) / (f.max - f.min));
}

// Caller guarantees matching schemas and one weight per field.
double weighted_distance(const FeatureVector& a, const FeatureVector& b, const NormStats& norm,
                         const std::vector<double>& w, double weight_sum) {
  double acc = 0.0;
  std::size_t i = 0;
  for (std::size_t n = 0; n < a.numeric.size(); ++n, ++i)
    acc += w[i] * numeric_term(a.numeric[n].second, b.numeric[n].second, norm.fields[n]);
  for (std::size_t c = 0; c < a.categorical.size(); ++c, ++i)
    acc += w[i] * (a.categorical[c].second == b.categorical[c].second ? 0.0 : 1.0);
  for (std::size_t s = 0; s < a.setvalued.size(); ++s, ++i)
    acc += w[i] * jaccard_distance(a.setvalued[s].second, b.setvalued[s].second);
  return acc / weight_sum;
}

std::vector<double> resolve_weights(const FeatureSchema& schema, const FieldWeights& weights) {
  std::vector<double> out;
  out.reserve(schema.field_count());
  auto lookup = [&](const std::string& name) {
    auto it = weights.find(name);
    return it == weights.end() ? 1.0 : it->second;
  };
  for (const auto& n : schema.numeric) out.push_back(lookup(n));
  for (const auto& n : schema.categorical) out.push_back(lookup(n));
  for (const auto& n : schema.setvalued) out.push_back(lookup(n));
  return out;
}

NormStats empty_norm(const FeatureSchema& schema) {
  NormStats norm;
  for (const auto& n : schema.numeric) norm.fields.push_back({n, 0.0, 0.0, true});
  return norm;
}

void extend_norm(NormStats& norm, const FeatureVector& v, bool first) {
  for (std::size_t i = 0; i < v.numeric.size(); ++i) {
    NormField& f = norm.fields[i];
    const double x = v.numeric[i].second;
    if (first) {
      f.min = f.max = x;
    } else {
      f.min = std::min(f.min, x);
      f.max = std::max(f.max, x);
    }
    f.degenerate = !(f.min < f.max);
  }
}

}  // namespace

std::string_view to_string(InstanceSource s) {
  switch (s) {
    case InstanceSource::CaregiverAssignment: return "CaregiverAssignment";
    case InstanceSource::CaregiverRefinement: return "CaregiverRefinement";
    case InstanceSource::Simulated: return "Simulated";
  }
  return "Simulated";
}

InstanceSource parse_instance_source(std::string_view s) {
  if (s == "CaregiverAssignment") return InstanceSource::CaregiverAssignment;
  if (s == "CaregiverRefinement") return InstanceSource::CaregiverRefinement;
  if (s == "Simulated") return InstanceSource::Simulated;
  throw Error("ValidationError", "unknown instance source: " + std::string(s));
}

std::string_view to_string(PredictionStatus s) { return s == PredictionStatus::Ok ? "Ok" : "ColdStart"; }

NormStats fit_normalizer(std::span<const LabeledInstance> instances) {
  if (instances.empty()) throw Error("EmptyTrainingSet", "cannot fit normalizer on zero instances");
  NormStats norm = empty_norm(schema_of(instances.front().features));
  bool first = true;
  for (const auto& inst : instances) {
    extend_norm(norm, inst.features, first);
    first = false;
  }
  return norm;
}

double distance(const FeatureVector& a, const FeatureVector& b, const NormStats& norm, const FieldWeights& weights) {
  const FeatureSchema schema = schema_of(a);
  if (!schema.matches(b) || norm.fields.size() != a.numeric.size())
    throw Error("SchemaMismatch", "feature vectors do not share a schema");
  for (std::size_t i = 0; i < norm.fields.size(); ++i)
    if (norm.fields[i].name != a.numeric[i].first) throw Error("SchemaMismatch", "normalizer field order differs");
  const auto w = resolve_weights(schema, weights);
  double sum = 0;
  for (double x : w) sum += x;
  if (!(sum > 0)) throw Error("ValidationError", "all field weights are zero");
  return weighted_distance(a, b, norm, w, sum);
}

KnnModel::KnnModel(std::string schema_id, FeatureSchema schema, std::string default_label, int k,
                   FieldWeights weights)
    : schema_id_(std::move(schema_id)),
      schema_(std::move(schema)),
      default_label_(std::move(default_label)),
      k_(k),
      weights_(std::move(weights)) {
  if (k_ <= 0 || k_ % 2 == 0) throw Error("ConfigInvalid", "k must be odd and positive");
  for (const auto& [name, w] : weights_)
    if (!(w >= 0) || !std::isfinite(w)) throw Error("ConfigInvalid", "weight for " + name + " must be >= 0");
  resolved_ = resolve_weights(schema_, weights_);
  for (double w : resolved_) weight_sum_ += w;
  if (!(weight_sum_ > 0)) throw Error("ConfigInvalid", "at least one field weight must be positive");
  norm_ = empty_norm(schema_);
}

std::int64_t KnnModel::add(FeatureVector features, std::string label, InstanceSource source, Timestamp created_at) {
  if (!schema_.matches(features)) throw Error("SchemaMismatch", "instance does not match schema " + schema_id_);
  if (label.empty()) throw Error("ValidationError", "label must be nonempty");
  for (const auto& [name, x] : features.numeric)
    if (!std::isfinite(x)) throw Error("ValidationError", "non-finite value for " + name);
  extend_norm(norm_, features, instances_.empty());
  const auto id = static_cast<std::int64_t>(instances_.size()) + 1;
  instances_.push_back({id, std::move(features), std::move(label), source, created_at});
  ++version_;
  return id;
}

Prediction KnnModel::predict(const FeatureVector& query) const {
  if (!schema_.matches(query)) throw Error("SchemaMismatch", "query does not match schema " + schema_id_);
  if (instances_.empty()) return {default_label_, 0.0, {}, PredictionStatus::ColdStart};

  std::vector<std::pair<double, std::int64_t>> scored;
  scored.reserve(instances_.size());
  for (const auto& inst : instances_)
    scored.emplace_back(weighted_distance(query, inst.features, norm_, resolved_, weight_sum_), inst.instance_id);
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k_), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(kk), scored.end());

  // Labels in first-seen order along the sorted neighbor list, so ties on
  // votes go to the label holding the nearest neighbor.
  std::vector<std::pair<const std::string*, int>> votes;
  Prediction p;
  p.status = PredictionStatus::Ok;
  for (std::size_t i = 0; i < kk; ++i) {
    const auto& label = instances_[static_cast<std::size_t>(scored[i].second - 1)].label;
    p.neighbor_ids.push_back(scored[i].second);
    auto it = std::find_if(votes.begin(), votes.end(), [&](const auto& v) { return *v.first == label; });
    if (it == votes.end())
      votes.emplace_back(&label, 1);
    else
      ++it->second;
  }
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second > best->second) best = it;
  p.label = *best->first;
  p.confidence = static_cast<double>(best->second) / static_cast<double>(kk);
  return p;
}

Prediction knn_predict(const KnnModel& model, const FeatureVector& query) { return model.predict(query); }

KnnModel add_labeled_instance(const KnnModel& model, FeatureVector features, std::string label,
                              InstanceSource source, Timestamp created_at) {
  KnnModel next = model;
  next.add(std::move(features), std::move(label), source, created_at);
  return next;
}

nlohmann::json features_to_json(const FeatureVector& v) {
  nlohmann::json j;
  j["numeric"] = nlohmann::json::array();
  for (const auto& [n, x] : v.numeric) j["numeric"].push_back({n, x});
  j["categorical"] = nlohmann::json::array();
  for (const auto& [n, x] : v.categorical) j["categorical"].push_back({n, x});
  j["setvalued"] = nlohmann::json::array();
  for (const auto& [n, x] : v.setvalued) j["setvalued"].push_back({n, x});
  return j;
}

FeatureVector features_from_json(const nlohmann::json& j) {
  FeatureVector v;
  for (const auto& f : j.at("numeric")) v.numeric.emplace_back(f.at(0).get<std::string>(), f.at(1).get<double>());
  for (const auto& f : j.at("categorical"))
    v.categorical.emplace_back(f.at(0).get<std::string>(), f.at(1).get<std::string>());
  for (const auto& f : j.at("setvalued")) v.setvalued.emplace_back(f.at(0).get<std::string>(), f.at(1).get<TagSet>());
  return v;
}

nlohmann::json export_model(const KnnModel& model) {
  nlohmann::json doc;
  doc["schema_version"] = kModelFormatVersion;
  doc["schema_id"] = model.schema_id();
  doc["schema"] = {{"numeric", model.schema().numeric},
                   {"categorical", model.schema().categorical},
                   {"setvalued", model.schema().setvalued}};
  doc["version"] = model.version();
  doc["k"] = model.k();
  doc["default_label"] = model.default_label();
  doc["weights"] = model.weights();
  doc["norm"] = nlohmann::json::array();
  for (const auto& f : model.norm().fields)
    doc["norm"].push_back({{"field", f.name}, {"min", f.min}, {"max", f.max}, {"degenerate", f.degenerate}});
  doc["instances"] = nlohmann::json::array();
  for (const auto& inst : model.instances()) {
    doc["instances"].push_back({{"instance_id", inst.instance_id},
                                {"label", inst.label},
                                {"source", to_string(inst.source)},
                                {"created_at", format_timestamp(inst.created_at)},
                                {"features", features_to_json(inst.features)}});
  }
  return doc;
}

KnnModel import_model(const nlohmann::json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kModelFormatVersion)
      throw Error("VersionMismatch", "model schema_version " + doc.at("schema_version").dump());
    FeatureSchema schema{doc.at("schema").at("numeric").get<std::vector<std::string>>(),
                         doc.at("schema").at("categorical").get<std::vector<std::string>>(),
                         doc.at("schema").at("setvalued").get<std::vector<std::string>>()};
    KnnModel model(doc.at("schema_id").get<std::string>(), std::move(schema),
                   doc.at("default_label").get<std::string>(), doc.at("k").get<int>(),
                   doc.at("weights").get<FieldWeights>());
    std::int64_t expected_id = 1;
    for (const auto& inst : doc.at("instances")) {
      if (inst.at("instance_id").get<std::int64_t>() != expected_id++)
        throw Error("ValidationError", "instance ids must be 1..n in order");
      model.add(features_from_json(inst.at("features")), inst.at("label").get<std::string>(),
                parse_instance_source(inst.at("source").get<std::string>()),
                parse_timestamp(inst.at("created_at").get<std::string>()));
    }
    if (model.version() != doc.at("version").get<std::uint64_t>())
      throw Error("ValidationError", "model version does not match instance count");
    if (export_model(model).at("norm") != doc.at("norm"))
      throw Error("ValidationError", "stored normalization inconsistent with instances");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error("ValidationError", std::string("malformed model document: ") + e.what());
  }
}

}  // namespace coachme
