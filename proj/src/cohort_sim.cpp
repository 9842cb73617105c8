#include "coachme/cohort_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "coachme/error.hpp"
#include "coachme/json_io.hpp"

namespace coachme {

using json = nlohmann::json;
using std::chrono::days;
using std::chrono::hours;
using std::chrono::minutes;

namespace {

constexpr UserType kTypeOrder[] = {UserType::Active, UserType::Neutral, UserType::Passive};

int type_index(UserType t) {
  switch (t) {
    case UserType::Active: return 0;
    case UserType::Neutral: return 1;
    case UserType::Passive: return 2;
  }
  return 1;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
  return xs[rng.index(xs.size())];
}

TagSet pick_some(Rng& rng, const TagSet& from, int lo, int hi) {
  std::vector<std::string> pool(from.begin(), from.end());
  const int n = lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
  TagSet out;
  for (int i = 0; i < n && !pool.empty(); ++i) {
    const std::size_t j = rng.index(pool.size());
    out.insert(pool[j]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return out;
}

double round_to(double x, double step) { return std::round(x / step) * step; }

std::string user_id_for(int i) {
  std::string s = std::to_string(i + 1);
  return "u" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

// Local clock times (minutes after midnight) at which slot buttons are pressed.
int press_minute(int slot) {
  static const int kTimes[] = {9 * 60, 13 * 60, 20 * 60};
  return slot < 3 ? kTimes[slot] : 20 * 60 + 10 * (slot - 2);
}

}  // namespace

std::vector<SimUser> synth_cohort(int n, const CohortConfig& cfg, std::uint64_t seed) {
  if (n < 3) throw Error("ConfigInvalid", "cohort needs at least 3 users");
  double total = 0;
  for (double w : cfg.mix) {
    if (!std::isfinite(w) || w < 0) throw Error("BadMix", "mix weights must be finite and non-negative");
    total += w;
  }
  if (total <= 0) throw Error("BadMix", "mix weights sum to zero");

  // Largest remainder, ties to the earlier type.
  std::array<int, 3> counts{};
  std::array<double, 3> rest{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double quota = n * cfg.mix[i] / total;
    counts[i] = static_cast<int>(std::floor(quota));
    rest[i] = quota - counts[i];
    assigned += counts[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rest[i] > rest[best]) best = i;
    ++counts[best];
    rest[best] = -1;
    ++assigned;
  }

  Rng rng(seed);
  std::vector<UserType> types;
  for (int i = 0; i < 3; ++i) types.insert(types.end(), counts[i], kTypeOrder[i]);
  for (std::size_t i = types.size(); i > 1; --i) std::swap(types[i - 1], types[rng.index(i)]);

  const Vocabulary vocab = Vocabulary::defaults();
  std::vector<std::string> conditions;
  for (const auto& c : vocab.health_conditions)
    if (c != "none") conditions.push_back(c);

  std::vector<SimUser> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SimUser u;
    RawProfile& p = u.profile;
    p.user_id = user_id_for(i);
    p.age = 18 + static_cast<int>(rng.index(58));
    p.gender = rng.bernoulli(0.5) ? Gender::Female : Gender::Male;
    p.height_m = p.gender == Gender::Female ? rng.uniform(1.50, 1.80) : rng.uniform(1.60, 1.95);
    p.height_m = round_to(p.height_m, 0.01);
    const double bmi = rng.uniform(18.5, 38.0);
    p.weight_kg = round_to(bmi * p.height_m * p.height_m, 0.1);
    p.education = static_cast<Education>(rng.index(4));
    p.health_condition = rng.bernoulli(0.5) ? "none" : pick(rng, conditions);
    p.preferred_activities = pick_some(rng, vocab.activity_tags, 1, 3);
    p.preferred_foods = pick_some(rng, vocab.food_tags, 1, 3);
    for (const auto& r : vocab.resources)
      if (rng.bernoulli(0.4)) p.resources.insert(r);

    const int t = type_index(types[static_cast<std::size_t>(i)]);
    const double jitter = cfg.jitter > 0 ? rng.uniform(-cfg.jitter, cfg.jitter) : 0.0;
    u.behavior.latent_type = types[static_cast<std::size_t>(i)];
    u.behavior.comply_prob = std::clamp(cfg.comply_prob[t] + jitter, cfg.clamp_lo, cfg.clamp_hi);
    u.chat_id = 1000 + i;
    out.push_back(std::move(u));
  }
  return out;
}

json cohort_to_json(const std::vector<SimUser>& cohort) {
  json users = json::array();
  for (const auto& u : cohort)
    users.push_back({{"profile", raw_profile_to_json(u.profile)},
                     {"chat_id", u.chat_id},
                     {"latent_type", to_string(u.behavior.latent_type)},
                     {"comply_prob", u.behavior.comply_prob}});
  return json{{"users", users}};
}

void validate_experiment(const ExperimentConfig& c) {
  auto bad = [](const std::string& what) { throw Error("ConfigInvalid", what); };
  if (c.n_users < 3) bad("n_users must be at least 3");
  if (!(c.train_fraction > 0 && c.train_fraction <= 1)) bad("train_fraction must be in (0, 1]");
  if (c.weeks < 1) bad("weeks must be positive");
  if (c.slots_per_day < 1) bad("slots_per_day must be positive");
  if (c.k < 1 || c.k % 2 == 0) bad("k must be a positive odd number");
  if (!(c.passive_threshold < c.active_threshold)) bad("passive_threshold must be below active_threshold");
  for (double p : c.cohort.comply_prob)
    if (!(p >= 0 && p <= 1)) bad("comply_prob must be in [0, 1]");
  if (!(c.cohort.clamp_lo <= c.cohort.clamp_hi)) bad("clamp range is empty");
  for (const auto& row : c.emotion_mix)
    if (std::accumulate(row.begin(), row.end(), 0.0) <= 0) bad("emotion_mix rows must have positive mass");
  parse_date(c.start_date);
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.n_users = j.value("n_users", c.n_users);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.weeks = j.value("weeks", c.weeks);
    if (!j.contains("seed")) throw Error("ConfigInvalid", "seed is required");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.slots_per_day = j.value("slots_per_day", c.slots_per_day);
    c.k = j.value("k", c.k);
    c.active_threshold = j.value("active_threshold", c.active_threshold);
    c.passive_threshold = j.value("passive_threshold", c.passive_threshold);
    c.pre_weights = j.value("pre_weights", c.pre_weights);
    c.post_weights = j.value("post_weights", c.post_weights);
    c.skip_press_prob = j.value("skip_press_prob", c.skip_press_prob);
    c.start_date = j.value("start_date", c.start_date);
    c.min_accuracy = j.value("min_accuracy", c.min_accuracy);
    c.oracle_margin = j.value("oracle_margin", c.oracle_margin);
    if (j.contains("mix")) {
      const json& m = j.at("mix");
      c.cohort.mix = {m.value("Active", 0.0), m.value("Neutral", 0.0), m.value("Passive", 0.0)};
    }
    if (j.contains("comply_prob")) {
      const json& m = j.at("comply_prob");
      c.cohort.comply_prob = {m.value("Active", c.cohort.comply_prob[0]), m.value("Neutral", c.cohort.comply_prob[1]),
                              m.value("Passive", c.cohort.comply_prob[2])};
    }
    c.cohort.jitter = j.value("jitter", c.cohort.jitter);
    c.cohort.clamp_lo = j.value("clamp_lo", c.cohort.clamp_lo);
    c.cohort.clamp_hi = j.value("clamp_hi", c.cohort.clamp_hi);
    if (j.contains("emotion_mix")) {
      for (int t = 0; t < 3; ++t) {
        const json& row = j.at("emotion_mix").at(std::string(to_string(kTypeOrder[t])));
        for (int e = 0; e < 4; ++e) c.emotion_mix[t][e] = row.value(std::string(to_string(kAllEmotions[e])), 0.0);
      }
    }
  } catch (const json::exception& e) {
    throw Error("ConfigInvalid", e.what());
  }
  validate_experiment(c);
  return c;
}

json experiment_to_json(const ExperimentConfig& c) {
  json emotion = json::object();
  for (int t = 0; t < 3; ++t)
    for (int e = 0; e < 4; ++e)
      emotion[std::string(to_string(kTypeOrder[t]))][std::string(to_string(kAllEmotions[e]))] = c.emotion_mix[t][e];
  return json{{"n_users", c.n_users},
              {"mix", {{"Active", c.cohort.mix[0]}, {"Neutral", c.cohort.mix[1]}, {"Passive", c.cohort.mix[2]}}},
              {"comply_prob",
               {{"Active", c.cohort.comply_prob[0]},
                {"Neutral", c.cohort.comply_prob[1]},
                {"Passive", c.cohort.comply_prob[2]}}},
              {"jitter", c.cohort.jitter},
              {"clamp_lo", c.cohort.clamp_lo},
              {"clamp_hi", c.cohort.clamp_hi},
              {"train_fraction", c.train_fraction},
              {"weeks", c.weeks},
              {"seed", c.seed},
              {"slots_per_day", c.slots_per_day},
              {"k", c.k},
              {"active_threshold", c.active_threshold},
              {"passive_threshold", c.passive_threshold},
              {"pre_weights", c.pre_weights},
              {"post_weights", c.post_weights},
              {"emotion_mix", emotion},
              {"skip_press_prob", c.skip_press_prob},
              {"start_date", c.start_date},
              {"min_accuracy", c.min_accuracy},
              {"oracle_margin", c.oracle_margin}};
}

std::map<std::string, PlanTemplate> experiment_templates(int s) {
  std::map<std::string, PlanTemplate> out;
  out["baseline-v1"] = baseline_template("baseline-v1", s);
  // Gentle: lighter on exercise, heavier on wellness. Active: the reverse.
  const int diet = std::max(1, s / 3);
  const int rest = s - diet;
  PlanTemplate gentle{"gentle-v1", {{ActivityKind::Diet, diet}, {ActivityKind::Wellness, rest}}, {},
                      "for users with a limiting condition or high BMI"};
  PlanTemplate active{"active-v1", {{ActivityKind::Diet, diet}, {ActivityKind::Physical, rest}}, {},
                      "for younger users without limiting conditions"};
  if (rest == 0) {
    gentle.kind_mix = {{ActivityKind::Diet, s}};
    active.kind_mix = {{ActivityKind::Diet, s}};
  }
  out[gentle.template_id] = gentle;
  out[active.template_id] = active;
  return out;
}

std::string caregiver_template(const RawProfile& p) {
  const double bmi = p.weight_kg / (p.height_m * p.height_m);
  if (bmi >= 30 || p.health_condition == "type2-diabetes" || p.health_condition == "hypertension") return "gentle-v1";
  if (p.age < 45) return "active-v1";
  return "baseline-v1";
}

ServiceConfig experiment_service_config(const ExperimentConfig& c) {
  ServiceConfig cfg;
  cfg.seed = c.seed;
  cfg.iml.k = c.k;
  cfg.iml.pre_weights = c.pre_weights;
  cfg.iml.post_weights = c.post_weights;
  cfg.iml.adherence.active_threshold = c.active_threshold;
  cfg.iml.adherence.passive_threshold = c.passive_threshold;
  cfg.planning.slots_per_day = c.slots_per_day;
  cfg.templates = experiment_templates(c.slots_per_day);
  finalize_config(cfg);
  return cfg;
}

CohortRun::CohortRun(const ExperimentConfig& cfg, std::vector<SimUser> cohort)
    : cfg_(cfg),
      cohort_(std::move(cohort)),
      start_(parse_date(cfg.start_date)),
      clock_(start_),
      service_(std::make_unique<Service>(experiment_service_config(cfg), EventLog::in_memory(), clock_)),
      rng_(cfg.seed ^ 0x5eedf00dULL),
      update_ids_(cohort_.size(), 0),
      tally_(cohort_.size()) {}

json CohortRun::request(const std::string& method, const std::string& path, const json& body,
                        std::map<std::string, std::string> query) {
  ApiRequest r{method, path, std::move(query), body.is_null() ? std::string{} : body.dump(), {}};
  const ApiResponse res = handle_request(*service_, r);
  if (res.status >= 300)
    throw Error(res.body.value("code", std::string{"Internal"}), method + " " + path + ": " + res.body.value("message", ""));
  return res.body;
}

json CohortRun::bot(const json& update) {
  return request("POST", "/bot/update", update).at("messages");
}

std::vector<std::string> CohortRun::register_users(const std::vector<std::size_t>& which) {
  std::vector<std::string> suggestions;
  for (std::size_t i : which) {
    const SimUser& u = cohort_[i];
    const json res =
        request("POST", "/users", {{"profile", raw_profile_to_json(u.profile)}, {"chat_id", u.chat_id}});
    suggestions.push_back(res.at("suggestion").at("label").get<std::string>());
    bot({{"update_id", next_update(i)}, {"message", {{"chat_id", u.chat_id}, {"text", "/start"}}}});
  }
  return suggestions;
}

void CohortRun::assign_week(const std::vector<std::size_t>& which, Date week_start) {
  for (std::size_t i : which) {
    const SimUser& u = cohort_[i];
    request("POST", "/users/" + u.profile.user_id + "/plan",
            {{"template_id", caregiver_template(u.profile)}, {"week_start", format_date(week_start)}});
  }
}

void CohortRun::simulate_day(Date day) {
  const auto at = [&](int minute) { clock_.set(day + minutes{minute}); };
  const auto poll = [&](int minute) {
    at(minute);
    request("GET", "/notifications/due", nullptr, {{"now", format_timestamp(clock_.now())}});
  };
  const int s_per_day = cfg_.slots_per_day;

  poll(6 * 60);
  at(7 * 60 + 30);
  // Each user opens today's plan; remember the buttons per slot row.
  std::vector<std::vector<json>> rows(cohort_.size());
  for (std::size_t i = 0; i < cohort_.size(); ++i) {
    const json msgs =
        bot({{"update_id", next_update(i)}, {"message", {{"chat_id", cohort_[i].chat_id}, {"text", "/newplan"}}}});
    for (const auto& m : msgs) {
      if (!m.contains("reply_markup")) continue;
      for (const auto& row : m.at("reply_markup").at("inline_keyboard")) rows[i].push_back(row);
    }
    if (!rows[i].empty()) tally_[i][day].first += static_cast<int>(rows[i].size());
  }

  for (int s = 0; s < s_per_day; ++s) {
    poll(press_minute(s) - 30);
    at(press_minute(s));
    for (std::size_t i = 0; i < cohort_.size(); ++i) {
      if (static_cast<std::size_t>(s) >= rows[i].size()) continue;
      const json& row = rows[i][static_cast<std::size_t>(s)];
      const bool comply = rng_.bernoulli(cohort_[i].behavior.comply_prob);
      if (!comply && !rng_.bernoulli(cfg_.skip_press_prob)) continue;
      const json& button = row.at(comply ? 0 : 1);
      bot({{"update_id", next_update(i)},
           {"callback_query", {{"chat_id", cohort_[i].chat_id}, {"data", button.at("callback_data")}}}});
      ++presses_;
      if (comply) ++tally_[i][day].second;
    }
  }

  at(21 * 60 + 30);
  for (std::size_t i = 0; i < cohort_.size(); ++i) {
    const json msgs =
        bot({{"update_id", next_update(i)}, {"message", {{"chat_id", cohort_[i].chat_id}, {"text", "/mood"}}}});
    const auto& mix = cfg_.emotion_mix[type_index(cohort_[i].behavior.latent_type)];
    const double total = std::accumulate(mix.begin(), mix.end(), 0.0);
    double x = rng_.uniform() * total;
    std::size_t e = 0;
    while (e + 1 < 4 && x >= mix[e]) x -= mix[e++];
    for (const auto& m : msgs) {
      if (!m.contains("reply_markup")) continue;
      const json& keys = m.at("reply_markup").at("inline_keyboard");
      const std::string data = encode_callback(EmotionCallback{kAllEmotions[e]});
      for (const auto& row : keys)
        for (const auto& b : row)
          if (b.at("callback_data") == data)
            bot({{"update_id", next_update(i)}, {"callback_query", {{"chat_id", cohort_[i].chat_id}, {"data", data}}}});
    }
  }
  poll(23 * 60 + 30);
}

void CohortRun::simulate_weeks(int weeks) {
  std::vector<std::size_t> everyone(cohort_.size());
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  for (int w = 0; w < weeks; ++w) {
    const Date week_start = start_ + days{7 * w};
    if (w > 0) {
      clock_.set(week_start);
      assign_week(everyone, week_start);
    }
    for (int d = 0; d < 7; ++d) simulate_day(week_start + days{d});
  }
}

int CohortRun::complied(std::size_t user, Date from, Date to) const {
  int n = 0;
  for (auto it = tally_[user].lower_bound(from); it != tally_[user].end() && it->first <= to; ++it) n += it->second.second;
  return n;
}

int CohortRun::assigned(std::size_t user, Date from, Date to) const {
  int n = 0;
  for (auto it = tally_[user].lower_bound(from); it != tally_[user].end() && it->first <= to; ++it) n += it->second.first;
  return n;
}

namespace {

std::string confusion_text(const std::array<std::array<int, 3>, 3>& m, const std::string& title) {
  std::ostringstream out;
  out << title << " (rows: latent, columns: predicted)\n";
  out << "          Active  Neutral  Passive\n";
  const char* names[] = {"Active ", "Neutral", "Passive"};
  for (int r = 0; r < 3; ++r) {
    out << names[r] << "  ";
    for (int c = 0; c < 3; ++c) {
      std::string cell = std::to_string(m[r][c]);
      out << std::string(c == 0 ? 6 - cell.size() : 9 - cell.size(), ' ') << cell;
    }
    out << "\n";
  }
  return out.str();
}

json confusion_json(const std::array<std::array<int, 3>, 3>& m) {
  json out = json::object();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      out[std::string(to_string(kTypeOrder[r]))][std::string(to_string(kTypeOrder[c]))] = m[r][c];
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_experiment(cfg);
  std::vector<SimUser> cohort = synth_cohort(cfg.n_users, cfg.cohort, cfg.seed);
  const std::size_t n = cohort.size();

  // Seeded split; train users are the first ones of a shuffled order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(cfg.seed + 1);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[split_rng.index(i)]);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n))), 1, n);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  if (test.empty()) test = train;
  const bool self_test = test == train;

  CohortRun run(cfg, std::move(cohort));
  const Date start = run.start();

  // Train users join first so that test registrations see a trained pre-model.
  run.register_users(train);
  run.assign_week(train, start);
  std::vector<std::string> test_suggestions;
  if (!self_test) {
    test_suggestions = run.register_users(test);
    run.assign_week(test, start);
  }
  run.simulate_weeks(cfg.weeks);

  const Date as_of = start + days{7 * cfg.weeks - 1};
  const int window = run.service().config().adherence().window_days;
  const Date window_from = as_of - days{window - 1};
  run.clock().set(as_of + hours{23});

  // The simulated caregiver reviews each training user and refines the plan.
  for (std::size_t i : train) {
    const RawProfile& p = run.cohort()[i].profile;
    run.request("POST", "/users/" + p.user_id + "/refine",
                {{"template_id", caregiver_template(p)}, {"as_of", format_date(as_of)}});
  }

  std::array<std::array<int, 3>, 3> model_cm{}, oracle_cm{};
  int model_hits = 0, oracle_hits = 0, label_agree = 0, pre_agree = 0;
  std::array<double, 3> score_sum{};
  std::array<int, 3> type_count{};
  json per_user = json::array();
  for (std::size_t t = 0; t < test.size(); ++t) {
    const std::size_t i = test[t];
    const SimUser& u = run.cohort()[i];
    const json detail = run.request("GET", "/users/" + u.profile.user_id, nullptr, {{"as_of", format_date(as_of)}});
    const UserType predicted = parse_user_type(detail.at("prediction").at("label").get<std::string>());

    const int a = run.assigned(i, window_from, as_of);
    const int c = run.complied(i, window_from, as_of);
    UserType oracle = UserType::Neutral;
    if (a > 0) {
      const double score = static_cast<double>(c) / a;
      oracle = score >= cfg.active_threshold ? UserType::Active
               : score >= cfg.passive_threshold ? UserType::Neutral
                                                : UserType::Passive;
      score_sum[type_index(u.behavior.latent_type)] += score;
    }
    const int latent = type_index(u.behavior.latent_type);
    ++type_count[latent];
    ++model_cm[latent][type_index(predicted)];
    ++oracle_cm[latent][type_index(oracle)];
    model_hits += predicted == u.behavior.latent_type;
    oracle_hits += oracle == u.behavior.latent_type;
    label_agree += predicted == oracle;
    if (!self_test) pre_agree += test_suggestions[t] == caregiver_template(u.profile);
    per_user.push_back({{"user_id", u.profile.user_id},
                        {"latent", to_string(u.behavior.latent_type)},
                        {"predicted", to_string(predicted)},
                        {"oracle", to_string(oracle)},
                        {"assigned", a},
                        {"complied", c}});
  }

  const double m = static_cast<double>(test.size());
  const double accuracy = model_hits / m;
  const double oracle_accuracy = oracle_hits / m;
  json observed = json::object();
  for (int t = 0; t < 3; ++t)
    observed[std::string(to_string(kTypeOrder[t]))] =
        type_count[t] > 0 ? json(score_sum[t] / type_count[t]) : json(nullptr);

  const bool floor_ok = accuracy >= cfg.min_accuracy;
  const bool oracle_ok = accuracy >= oracle_accuracy - cfg.oracle_margin;

  ExperimentResult result;
  result.event_log = run.service().log_bytes();
  result.report = json{{"config", experiment_to_json(cfg)},
                       {"as_of", format_date(as_of)},
                       {"train_users", train.size()},
                       {"test_users", test.size()},
                       {"events", run.service().version()},
                       {"button_presses", run.button_presses()},
                       {"observed_mean_compliance", observed},
                       {"post_model_accuracy", accuracy},
                       {"oracle_accuracy", oracle_accuracy},
                       {"post_model_oracle_agreement", label_agree / m},
                       {"pre_model_agreement", self_test ? json(nullptr) : json(pre_agree / m)},
                       {"confusion", confusion_json(model_cm)},
                       {"oracle_confusion", confusion_json(oracle_cm)},
                       {"assertions",
                        {{{"name", "accuracy >= min_accuracy"}, {"passed", floor_ok}},
                         {{"name", "accuracy >= oracle_accuracy - oracle_margin"}, {"passed", oracle_ok}}}},
                       {"users", per_user}};
  result.confusion_text =
      confusion_text(model_cm, "post-model") + "\n" + confusion_text(oracle_cm, "threshold oracle");
  result.passed = floor_ok && oracle_ok;
  result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace coachme
