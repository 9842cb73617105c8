#include <doctest.h>

#include "coachme/adherence.hpp"
#include "support_plans.hpp"

using namespace testing;
using std::chrono::days;

namespace {

struct Fixture {
  ActivityPool pool = tiny_pool();
  Date start = day("2025-03-03");
  std::vector<Plan> plans;
  std::vector<ComplianceReport> reports;

  std::vector<const Plan*> ptrs() const {
    std::vector<const Plan*> out;
    for (const auto& p : plans) out.push_back(&p);
    return out;
  }
  ComplianceWindow window(Date as_of, int n = 28) const {
    const auto ps = ptrs();
    return build_window("john", ps, reports, as_of, n);
  }
};

}  // namespace

TEST_CASE("compliance score over a full week") {
  Fixture f;
  f.plans.push_back(uniform_plan("p1", "john", f.start, {"d1", "p1", "w1"}, f.pool));
  for (int d = 0; d < 7; ++d)
    for (int s = 0; s < 3; ++s) f.reports.push_back(report(f.plans[0], f.start + days{d}, s, true));
  const auto w = f.window(f.start + days{6}, 7);
  CHECK(w.assigned_count == 21);
  CHECK(w.complied_count == 21);
  CHECK(*compliance_score(w) == 1.0);
  CHECK(ground_truth_type(compliance_score(w)) == UserType::Active);
}

TEST_CASE("no assigned slots is NoData, which reads as Neutral") {
  Fixture f;
  const auto w = f.window(f.start);
  CHECK(w.assigned_count == 0);
  CHECK_FALSE(compliance_score(w).has_value());
  CHECK(ground_truth_type(std::nullopt) == UserType::Neutral);
}

TEST_CASE("84 assigned and 47 complied gives 47/84") {
  Fixture f;
  for (int w = 0; w < 4; ++w)
    f.plans.push_back(uniform_plan("p" + std::to_string(w + 1), "john", f.start + days{7 * w}, {"d1", "p1", "w1"}, f.pool));
  for (int d = 0; d < 28; ++d)
    for (int s = 0; s < 3; ++s)
      f.reports.push_back(report(f.plans[static_cast<std::size_t>(d / 7)], f.start + days{d}, s, d * 3 + s < 47));
  const auto w = f.window(f.start + days{27});
  CHECK(w.assigned_count == 84);
  CHECK(w.complied_count == 47);
  CHECK(w.report_count == 84);
  CHECK(*compliance_score(w) == 47.0 / 84.0);
  CHECK(ground_truth_type(compliance_score(w)) == UserType::Neutral);
}

TEST_CASE("ground truth thresholds") {
  CHECK(ground_truth_type(1.0) == UserType::Active);
  CHECK(ground_truth_type(0.7) == UserType::Active);
  CHECK(ground_truth_type(0.55) == UserType::Neutral);
  CHECK(ground_truth_type(0.4) == UserType::Neutral);
  CHECK(ground_truth_type(0.39) == UserType::Passive);
  AdherenceConfig strict;
  strict.active_threshold = 0.9;
  CHECK(ground_truth_type(0.85, strict) == UserType::Neutral);
}

TEST_CASE("trend is the OLS slope over scored days") {
  ComplianceWindow w;
  w.start = day("2025-03-03");
  const double ys[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 5; ++i) w.daily_scores.push_back({w.start + days{i}, 4, static_cast<int>(ys[i] * 4)});
  const Trend t = trend(w);
  CHECK(t.slope == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(t.kind == TrendKind::Improving);

  ComplianceWindow flat;
  flat.start = w.start;
  for (int i = 0; i < 5; ++i) flat.daily_scores.push_back({w.start + days{i}, 5, 4});
  CHECK(trend(flat).slope == doctest::Approx(0.0));
  CHECK(trend(flat).kind == TrendKind::Stable);

  // Unassigned days are skipped, not counted as zeros; x stays the day offset.
  ComplianceWindow gaps;
  gaps.start = w.start;
  gaps.daily_scores = {{w.start, 2, 0}, {w.start + days{1}, 0, 0}, {w.start + days{2}, 2, 1}};
  CHECK(trend(gaps).slope == doctest::Approx(0.25));

  ComplianceWindow one;
  one.start = w.start;
  one.daily_scores = {{w.start, 3, 3}};
  CHECK(error_code([&] { trend(one); }) == "InsufficientDays");
  CHECK(classify_slope(-0.05).kind == TrendKind::Declining);
}

TEST_CASE("the latest assigned plan covering a day is the effective one") {
  Fixture f;
  f.plans.push_back(uniform_plan("p1", "john", f.start, {"d1", "p1", "w1"}, f.pool));
  f.plans.push_back(uniform_plan("p2", "john", f.start + days{3}, {"d1", "p1", "w1"}, f.pool));
  f.reports.push_back(report(f.plans[0], f.start + days{1}, 0, true));
  f.reports.push_back(report(f.plans[0], f.start + days{4}, 0, true));  // superseded
  f.reports.push_back(report(f.plans[1], f.start + days{4}, 1, true));
  const auto w = f.window(f.start + days{9}, 10);
  CHECK(w.assigned_count == 30);
  CHECK(w.complied_count == 2);
  CHECK(w.report_count == 2);
}

TEST_CASE("days after as_of are outside the window") {
  Fixture f;
  f.plans.push_back(uniform_plan("p1", "john", f.start, {"d1", "p1", "w1"}, f.pool));
  f.reports.push_back(report(f.plans[0], f.start + days{5}, 0, true));
  const auto w = f.window(f.start + days{2});
  CHECK(w.assigned_count == 9);
  CHECK(w.complied_count == 0);
  CHECK(w.daily_scores.size() == 28);
  CHECK(w.daily_scores.back().date == f.start + days{2});
}

TEST_CASE("feedback summary counts per kind") {
  Fixture f;
  f.plans.push_back(uniform_plan("p1", "john", f.start, {"d1", "p1", "w1"}, f.pool));
  const auto empty = feedback_summary(f.plans[0], f.reports, f.pool);
  CHECK(empty.total.unreported == 21);
  for (const auto& r : empty.rows) CHECK(r.status == SlotStatus::Unreported);

  for (int d = 0; d < 7; ++d) {
    f.reports.push_back(report(f.plans[0], f.start + days{d}, 0, true));
    f.reports.push_back(report(f.plans[0], f.start + days{d}, 1, true));
    f.reports.push_back(report(f.plans[0], f.start + days{d}, 2, false));
  }
  const auto s = feedback_summary(f.plans[0], f.reports, f.pool);
  CHECK(s.total.complied == 14);
  CHECK(s.total.declined == 7);
  CHECK(s.total.unreported == 0);
  CHECK(s.by_kind.at(ActivityKind::Wellness).declined == 7);
  CHECK(s.by_kind.at(ActivityKind::Diet).complied == 7);
}

TEST_CASE("frequency table flags activities complied at least frequent_count times") {
  Fixture f;
  f.plans.push_back(uniform_plan("p1", "john", f.start, {"d1", "p1", "w1"}, f.pool));
  for (int d = 0; d < 5; ++d) f.reports.push_back(report(f.plans[0], f.start + days{d}, 0, true));
  for (int d = 0; d < 2; ++d) f.reports.push_back(report(f.plans[0], f.start + days{d}, 1, true));
  for (int d = 0; d < 7; ++d) f.reports.push_back(report(f.plans[0], f.start + days{d}, 2, false));
  const auto ps = f.ptrs();
  const auto t = frequency_stats(ps, f.reports, f.start + days{6});
  CHECK(t.entries.at("d1").count == 5);
  CHECK(t.is_frequent("d1"));
  CHECK(t.entries.at("p1").count == 2);
  CHECK_FALSE(t.is_frequent("p1"));
  CHECK_FALSE(t.entries.contains("w1"));

  CHECK(frequency_stats(ps, {}, f.start).entries.empty());
  // The trailing window drops old history.
  CHECK(frequency_stats(ps, f.reports, f.start + days{40}).entries.empty());
}
