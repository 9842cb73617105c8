#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "coachme/http_api.hpp"
#include "coachme/rng.hpp"
#include "coachme/service.hpp"

namespace coachme {

// Index order: Active, Neutral, Passive.
using TypeMix = std::array<double, 3>;

struct LatentBehavior {
  UserType latent_type = UserType::Neutral;
  double comply_prob = 0.55;  // base + jitter, clamped
};

struct SimUser {
  RawProfile profile;
  LatentBehavior behavior;
  std::int64_t chat_id = 0;
};

struct CohortConfig {
  TypeMix mix{1, 1, 1};
  std::array<double, 3> comply_prob{0.85, 0.55, 0.25};
  double jitter = 0.05;
  double clamp_lo = 0.01;
  double clamp_hi = 0.99;
};

// Throws BadMix (negative, non-finite or zero-sum weights) and
// ConfigInvalid for n < 3. Type counts follow the largest-remainder rule.
std::vector<SimUser> synth_cohort(int n, const CohortConfig& cfg, std::uint64_t seed);
nlohmann::json cohort_to_json(const std::vector<SimUser>& cohort);

struct ExperimentConfig {
  int n_users = 150;
  CohortConfig cohort;
  double train_fraction = 1.0 / 3.0;  // (0, 1]; 1 means train and test on the same users
  int weeks = 4;
  std::uint64_t seed = 42;
  int slots_per_day = 3;
  int k = 5;
  double active_threshold = 0.7;
  double passive_threshold = 0.4;
  FieldWeights pre_weights;
  FieldWeights post_weights = ImlConfig{}.post_weights;
  // Emotion button distribution per latent type (happy, sad, angry, neutral).
  std::array<std::array<double, 4>, 3> emotion_mix{{{0.5, 0.1, 0.1, 0.3}, {0.3, 0.2, 0.1, 0.4}, {0.15, 0.3, 0.2, 0.35}}};
  double skip_press_prob = 0.5;  // non-compliers who still tap "Skipped"
  std::string start_date = "2025-03-03";
  // Assertions checked by the CLI.
  double min_accuracy = 0.80;
  double oracle_margin = 0.05;
};

// Throws ConfigInvalid.
void validate_experiment(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);

// The templates the simulated caregiver chooses among, and its rule.
std::map<std::string, PlanTemplate> experiment_templates(int slots_per_day);
std::string caregiver_template(const RawProfile& p);
ServiceConfig experiment_service_config(const ExperimentConfig& cfg);

// Drives an in-process service through its public surfaces only: HTTP
// handler for caregiver actions, bot wire updates for users.
class CohortRun {
 public:
  CohortRun(const ExperimentConfig& cfg, std::vector<SimUser> cohort);

  // POST /users for each user, in order; returns each registration suggestion.
  std::vector<std::string> register_users(const std::vector<std::size_t>& which);
  // POST /users/{id}/plan with the caregiver's template.
  void assign_week(const std::vector<std::size_t>& which, Date week_start);
  // One day: /newplan, button presses, /mood, dispatcher polls.
  void simulate_day(Date day);
  // assign_week + 7 × simulate_day per week, starting at the configured date.
  void simulate_weeks(int weeks);

  nlohmann::json request(const std::string& method, const std::string& path, const nlohmann::json& body = nullptr,
                         std::map<std::string, std::string> query = {});
  nlohmann::json bot(const nlohmann::json& update);

  // The simulator's own tally over a date range, independent of the service.
  int complied(std::size_t user, Date from, Date to) const;
  int assigned(std::size_t user, Date from, Date to) const;

  Service& service() { return *service_; }
  ManualClock& clock() { return clock_; }
  const std::vector<SimUser>& cohort() const { return cohort_; }
  Date start() const { return start_; }
  std::int64_t button_presses() const { return presses_; }

 private:
  std::int64_t next_update(std::size_t user) { return ++update_ids_[user]; }

  ExperimentConfig cfg_;
  std::vector<SimUser> cohort_;
  Date start_;
  ManualClock clock_;
  std::unique_ptr<Service> service_;
  Rng rng_;
  std::vector<std::int64_t> update_ids_;
  std::vector<std::map<Date, std::pair<int, int>>> tally_;  // per user: day -> (assigned, complied)
  std::int64_t presses_ = 0;
};

struct ExperimentResult {
  nlohmann::json report;
  std::string confusion_text;
  std::string event_log;
  double runtime_seconds = 0;  // kept out of the report so reports compare byte for byte
  bool passed = false;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace coachme
