#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "coachme/bot_gateway.hpp"
#include "coachme/iml.hpp"
#include "coachme/planning.hpp"
#include "coachme/scheduling.hpp"

namespace coachme {

struct ServiceConfig {
  ImlConfig iml;
  PlanningConfig planning;
  SchedulingConfig scheduling;
  Vocabulary vocabulary = Vocabulary::defaults();
  ActivityPool pool;
  std::map<std::string, PlanTemplate> templates;
  ResponseCorpus corpus = ResponseCorpus::defaults();
  std::uint64_t seed = 42;
  bool ranking_ascending = true;  // most-at-risk first

  // Service process settings.
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string data_dir = "data";
  std::string caregiver_token;  // empty: no auth check

  const AdherenceConfig& adherence() const { return iml.adherence; }
};

// Fills in the baseline template and checks cross-field constraints.
// Throws ConfigInvalid.
void finalize_config(ServiceConfig& cfg);

// Reads the JSON config; relative paths inside it resolve against its directory.
// Keys: port, host, data_dir, caregiver_token, seed, k, epsilon, frequent_share,
// slots_per_day, active_threshold, passive_threshold, frequent_count,
// cluster_threshold, ranking_order ("asc"|"desc"), default_template,
// pre_weights, post_weights, activity_pool (array or path), templates,
// corpus (object or path), vocabulary.
ServiceConfig load_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
ServiceConfig load_config_file(const std::filesystem::path& path);

// COACHME_PORT, COACHME_DATA_DIR, COACHME_TOKEN, COACHME_K, COACHME_EPSILON,
// COACHME_ACTIVE_THRESHOLD, COACHME_PASSIVE_THRESHOLD, COACHME_FREQUENT_COUNT.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& env);
EnvLookup process_env();

// A small built-in activity pool covering all kinds, used when no pool is configured.
ActivityPool default_activity_pool();

}  // namespace coachme
