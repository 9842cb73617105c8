#include "coachme/http_api.hpp"

#include <httplib.h>

#include <regex>

#include "coachme/error.hpp"
#include "coachme/json_io.hpp"

namespace coachme {

namespace {

using json = nlohmann::json;

ApiResponse ok(int status, json body) { return {status, std::move(body), 0}; }

Date date_param(const ApiRequest& r, const std::string& key, const Service& s) {
  auto it = r.query.find(key);
  return it == r.query.end() ? s.today() : parse_date(it->second);
}

json body_json(const ApiRequest& r) {
  if (r.body.empty()) return json::object();
  try {
    json j = json::parse(r.body);
    if (!j.is_object()) throw Error("ValidationError", "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error("ValidationError", std::string("bad JSON body: ") + e.what());
  }
}

json messages_json(const std::vector<OutboundMessage>& msgs) {
  json out = json::array();
  for (const auto& m : msgs) out.push_back(json::parse(serialize_outbound(m)));
  return out;
}

template <typename T>
json array_of(const std::vector<T>& xs) {
  json out = json::array();
  for (const auto& x : xs) out.push_back(x);
  return out;
}

ApiResponse route(Service& svc, const ApiRequest& r) {
  const std::string& token = svc.config().caregiver_token;
  if (!token.empty() && r.authorization != "Bearer " + token) throw Error("Unauthorized", "missing or wrong token");

  static const std::regex user_re("^/users/([^/]+)$");
  static const std::regex user_op_re("^/users/([^/]+)/(plan|refine|suggestions)$");
  std::smatch m;
  const bool get = r.method == "GET";
  const bool post = r.method == "POST";

  if (post && r.path == "/users") {
    const json b = body_json(r);
    if (!b.contains("profile") || !b.contains("chat_id")) throw Error("ValidationError", "profile and chat_id required");
    const RawProfile raw = raw_profile_from_json(b.at("profile"));
    const auto res = svc.register_user(raw, b.at("chat_id").get<std::int64_t>(), b.value("display_name", std::string{}),
                                       b.value("utc_offset_minutes", 0));
    return ok(201, {{"user_id", res.user_id}, {"suggestion", res.suggestion}});
  }
  if (get && r.path == "/ranking") {
    const Date as_of = date_param(r, "as_of", svc);
    json rows = json::array();
    for (const auto& row : svc.ranking(as_of)) rows.push_back(ranking_row_to_json(row));
    return ok(200, {{"as_of", format_date(as_of)}, {"rows", rows}});
  }
  if (post && r.path == "/broadcast") {
    const json b = body_json(r);
    const auto msgs = svc.broadcast(b.value("text", std::string{}), b.value("filter", std::string{"all"}));
    return ok(200, {{"messages", messages_json(msgs)}});
  }
  if (get && r.path == "/clusters/proposed") {
    std::optional<double> threshold;
    if (auto it = r.query.find("threshold"); it != r.query.end()) threshold = std::stod(it->second);
    return ok(200, {{"clusters", array_of(svc.proposed_clusters(threshold))}});
  }
  if (post && r.path == "/clusters/confirm") {
    const json b = body_json(r);
    std::vector<ClusterEdit> edits;
    for (const auto& e : b.value("edits", json::array())) edits.push_back(cluster_edit_from_json(e));
    return ok(200, {{"clusters", array_of(svc.confirm_clusters(edits))}});
  }
  if (post && r.path == "/bot/update") {
    return ok(200, {{"messages", messages_json(svc.bot_update(r.body))}});
  }
  if (get && r.path == "/notifications/due") {
    auto it = r.query.find("now");
    const Timestamp now = it == r.query.end() ? svc.clock().now() : parse_timestamp(it->second);
    const DispatchResult d = svc.collect_due(now);
    return ok(200, {{"dispatched", array_of(d.dispatched)}, {"expired", d.expired}, {"messages", messages_json(d.messages)}});
  }
  if (std::regex_match(r.path, m, user_op_re)) {
    const std::string user_id = m[1];
    const std::string op = m[2];
    if (post && op == "plan") {
      const json b = body_json(r);
      const Date week_start = b.contains("week_start") ? parse_date(b.at("week_start").get<std::string>()) : svc.today();
      return ok(201, svc.assign_plan(user_id, b.value("template_id", svc.config().iml.default_template), week_start));
    }
    if (post && op == "refine") {
      const json b = body_json(r);
      if (!b.contains("template_id")) throw Error("ValidationError", "template_id required");
      const Date as_of = b.contains("as_of") ? parse_date(b.at("as_of").get<std::string>()) : svc.today();
      const auto res = svc.refine_plan(user_id, b.at("template_id").get<std::string>(), as_of);
      json labels = json::array();
      for (const auto& l : res.labels)
        labels.push_back({{"model", to_string(l.model)},
                          {"instance_id", l.instance_id},
                          {"label", l.label},
                          {"source", to_string(l.source)}});
      return ok(201, {{"plan", res.plan}, {"labels", labels}});
    }
    if (get && op == "suggestions") {
      auto n_it = r.query.find("n");
      auto seed_it = r.query.find("seed");
      const int n = n_it == r.query.end() ? 3 : std::stoi(n_it->second);
      const std::uint64_t seed = seed_it == r.query.end() ? svc.config().seed : std::stoull(seed_it->second);
      return ok(200, {{"suggestions", array_of(svc.suggestions(user_id, n, date_param(r, "as_of", svc), seed))}});
    }
  }
  if (get && std::regex_match(r.path, m, user_re)) {
    return ok(200, svc.user_detail(m[1], date_param(r, "as_of", svc)));
  }
  throw Error("NotFound", r.method + " " + r.path);
}

}  // namespace

int status_for(const std::string& code) {
  if (code == "Unauthorized") return 401;
  if (code == "NotFound" || code == "UnknownUser" || code == "UnknownTemplate" || code == "UnknownPlan" ||
      code == "UnknownChat")
    return 404;
  if (code.starts_with("Duplicate") || code == "NoAssignedPlan") return 409;
  if (code == "StorageFailure" || code == "Internal") return 500;
  return 400;
}

ApiResponse handle_request(Service& service, const ApiRequest& request) {
  ApiResponse res;
  try {
    res = route(service, request);
  } catch (const Error& e) {
    res = {status_for(e.code()), json{{"code", e.code()}, {"message", e.what()}}, 0};
  } catch (const std::invalid_argument& e) {
    res = {400, json{{"code", "ValidationError"}, {"message", e.what()}}, 0};
  } catch (const json::exception& e) {
    res = {400, json{{"code", "ValidationError"}, {"message", e.what()}}, 0};
  } catch (const std::exception& e) {
    res = {500, json{{"code", "Internal"}, {"message", e.what()}}, 0};
  }
  res.snapshot_version = service.version();
  return res;
}

void serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, {}, req.body, req.get_header_value("Authorization")};
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const ApiResponse out = handle_request(service, r);
    res.status = out.status;
    res.set_header("X-Snapshot-Version", std::to_string(out.snapshot_version));
    res.set_content(out.body.dump(), "application/json");
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  if (!server.listen(host, port)) throw Error("StorageFailure", "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace coachme
