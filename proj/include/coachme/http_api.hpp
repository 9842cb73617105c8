#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "coachme/service.hpp"

namespace coachme {

struct ApiRequest {
  std::string method;  // "GET" | "POST"
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string authorization;  // raw Authorization header, may be empty
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  std::int64_t snapshot_version = 0;
};

// Routes one request to the service. Never throws: failures come back as
// {"code", "message"} bodies with a mapped status.
ApiResponse handle_request(Service& service, const ApiRequest& request);

int status_for(const std::string& error_code);

// Blocks serving HTTP until the process is stopped.
void serve(Service& service, const std::string& host, int port);

}  // namespace coachme
