#include "coachme/config.hpp"

#include <cstdlib>
#include <fstream>

#include "coachme/error.hpp"
#include "coachme/json_io.hpp"

namespace coachme {

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("ConfigInvalid", "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("ConfigInvalid", path.string() + ": " + e.what());
  }
}

nlohmann::json inline_or_file(const nlohmann::json& v, const std::filesystem::path& base) {
  if (v.is_string()) return read_json_file(base / v.get<std::string>());
  return v;
}

}  // namespace

ActivityPool default_activity_pool() {
  const nlohmann::json pool = nlohmann::json::parse(R"([
    {"activity_id":"d-fruit-breakfast","kind":"Diet","title":"Fruit with breakfast","tags":["fruit","breakfast"],"required_resources":[],"importance":3},
    {"activity_id":"d-veg-lunch","kind":"Diet","title":"Vegetables at lunch","tags":["vegetables","lunch"],"required_resources":[],"importance":4},
    {"activity_id":"d-home-dinner","kind":"Diet","title":"Cook dinner at home","tags":["vegetables","cooking","dinner"],"required_resources":["kitchen"],"importance":4},
    {"activity_id":"d-water","kind":"Diet","title":"Drink two extra glasses of water","tags":["water","hydration"],"required_resources":[],"importance":2},
    {"activity_id":"d-fish","kind":"Diet","title":"Fish for dinner","tags":["fish","dinner","cooking"],"required_resources":["kitchen"],"importance":3},
    {"activity_id":"p-walk","kind":"Physical","title":"30 minute walk","tags":["walking","outdoor"],"required_resources":[],"importance":4},
    {"activity_id":"p-bike","kind":"Physical","title":"Bike ride","tags":["cycling","outdoor"],"required_resources":["bicycle"],"importance":3},
    {"activity_id":"p-hike","kind":"Physical","title":"Weekend hike","tags":["hiking","walking","outdoor"],"required_resources":["park-nearby"],"importance":3},
    {"activity_id":"p-gym","kind":"Physical","title":"Gym session","tags":["strength","indoor"],"required_resources":["gym-access"],"importance":3},
    {"activity_id":"w-stretch","kind":"Wellness","title":"Ten minutes of stretching","tags":["stretching","indoor"],"required_resources":[],"importance":2},
    {"activity_id":"w-meditate","kind":"Wellness","title":"Breathing meditation","tags":["meditation","indoor"],"required_resources":[],"importance":2},
    {"activity_id":"w-yoga","kind":"Wellness","title":"Yoga routine","tags":["yoga","stretching","indoor"],"required_resources":["yoga-mat"],"importance":3}
  ])");
  return activity_pool_from_json(pool);
}

void finalize_config(ServiceConfig& cfg) {
  if (cfg.planning.slots_per_day < 1) throw Error("ConfigInvalid", "slots_per_day must be positive");
  if (cfg.pool.empty()) cfg.pool = default_activity_pool();
  if (!cfg.templates.contains(cfg.iml.default_template))
    cfg.templates.emplace(cfg.iml.default_template,
                          baseline_template(cfg.iml.default_template, cfg.planning.slots_per_day));
  for (const auto& [id, t] : cfg.templates) {
    if (id != t.template_id) throw Error("ConfigInvalid", "template key mismatch for " + id);
    int sum = 0;
    for (const auto& [k, n] : t.kind_mix) sum += n;
    if (sum != cfg.planning.slots_per_day) throw Error("ConfigInvalid", "template " + id + " does not fill S slots");
  }
  const auto& a = cfg.iml.adherence;
  if (!(0 <= a.passive_threshold && a.passive_threshold <= a.active_threshold && a.active_threshold <= 1))
    throw Error("ConfigInvalid", "thresholds must satisfy 0 <= passive <= active <= 1");
  if (a.frequent_count < 1 || a.window_days < 1) throw Error("ConfigInvalid", "frequent_count/window_days must be positive");
  if (cfg.planning.epsilon < 0 || cfg.planning.epsilon > 1) throw Error("ConfigInvalid", "epsilon must be in [0,1]");
  if (cfg.planning.frequent_share < 0 || cfg.planning.frequent_share > 1)
    throw Error("ConfigInvalid", "frequent_share must be in [0,1]");
  for (const auto& [kind, rule] : cfg.scheduling.rules) {
    try {
      validate_rule(rule);
    } catch (const Error& e) {
      throw Error("ConfigInvalid", e.what());
    }
  }
  // Constructing the models validates k and weights.
  try {
    (void)ModelRegistry::create(cfg.iml);
  } catch (const Error& e) {
    throw Error("ConfigInvalid", e.what());
  }
}

ServiceConfig load_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ServiceConfig cfg;
  try {
    cfg.port = j.value("port", cfg.port);
    cfg.host = j.value("host", cfg.host);
    cfg.data_dir = j.value("data_dir", cfg.data_dir);
    cfg.caregiver_token = j.value("caregiver_token", cfg.caregiver_token);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.iml.k = j.value("k", cfg.iml.k);
    cfg.iml.default_template = j.value("default_template", cfg.iml.default_template);
    if (j.contains("pre_weights")) cfg.iml.pre_weights = j.at("pre_weights").get<FieldWeights>();
    if (j.contains("post_weights")) cfg.iml.post_weights = j.at("post_weights").get<FieldWeights>();
    cfg.planning.epsilon = j.value("epsilon", cfg.planning.epsilon);
    cfg.planning.frequent_share = j.value("frequent_share", cfg.planning.frequent_share);
    cfg.planning.slots_per_day = j.value("slots_per_day", cfg.planning.slots_per_day);
    cfg.planning.cluster_threshold = j.value("cluster_threshold", cfg.planning.cluster_threshold);
    cfg.iml.adherence.active_threshold = j.value("active_threshold", cfg.iml.adherence.active_threshold);
    cfg.iml.adherence.passive_threshold = j.value("passive_threshold", cfg.iml.adherence.passive_threshold);
    cfg.iml.adherence.frequent_count = j.value("frequent_count", cfg.iml.adherence.frequent_count);
    const std::string order = j.value("ranking_order", std::string("asc"));
    if (order != "asc" && order != "desc") throw Error("ConfigInvalid", "ranking_order must be asc or desc");
    cfg.ranking_ascending = order == "asc";
    if (j.contains("activity_pool")) cfg.pool = activity_pool_from_json(inline_or_file(j.at("activity_pool"), base_dir));
    if (j.contains("templates"))
      for (const auto& t : inline_or_file(j.at("templates"), base_dir)) {
        PlanTemplate tpl = t.get<PlanTemplate>();
        cfg.templates[tpl.template_id] = std::move(tpl);
      }
    if (j.contains("corpus")) cfg.corpus = ResponseCorpus::from_json(inline_or_file(j.at("corpus"), base_dir));
    if (j.contains("vocabulary")) {
      const auto& v = j.at("vocabulary");
      cfg.vocabulary.health_conditions = v.value("health_conditions", cfg.vocabulary.health_conditions);
      cfg.vocabulary.activity_tags = v.value("activity_tags", cfg.vocabulary.activity_tags);
      cfg.vocabulary.food_tags = v.value("food_tags", cfg.vocabulary.food_tags);
      cfg.vocabulary.resources = v.value("resources", cfg.vocabulary.resources);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("ConfigInvalid", e.what());
  } catch (const Error& e) {
    if (e.code() == "ConfigInvalid") throw;
    throw Error("ConfigInvalid", e.what());
  }
  finalize_config(cfg);
  return cfg;
}

ServiceConfig load_config_file(const std::filesystem::path& path) {
  return load_config(read_json_file(path), path.parent_path());
}

void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& env) {
  auto number = [&](const char* name, auto& target) {
    if (auto v = env(name)) {
      try {
        if constexpr (std::is_same_v<std::decay_t<decltype(target)>, int>)
          target = std::stoi(*v);
        else
          target = std::stod(*v);
      } catch (const std::exception&) {
        throw Error("ConfigInvalid", std::string(name) + " is not a number: " + *v);
      }
    }
  };
  number("COACHME_PORT", cfg.port);
  number("COACHME_K", cfg.iml.k);
  number("COACHME_EPSILON", cfg.planning.epsilon);
  number("COACHME_ACTIVE_THRESHOLD", cfg.iml.adherence.active_threshold);
  number("COACHME_PASSIVE_THRESHOLD", cfg.iml.adherence.passive_threshold);
  number("COACHME_FREQUENT_COUNT", cfg.iml.adherence.frequent_count);
  if (auto v = env("COACHME_DATA_DIR")) cfg.data_dir = *v;
  if (auto v = env("COACHME_TOKEN")) cfg.caregiver_token = *v;
  finalize_config(cfg);
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

}  // namespace coachme
