// Caregiver service: HTTP server, stdio bot gateway, and log maintenance.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "coachme/error.hpp"
#include "coachme/http_api.hpp"

namespace {

using coachme::Service;
using coachme::ServiceConfig;

ServiceConfig load(const std::string& config_path, const std::string& data_dir) {
  ServiceConfig cfg;
  if (!config_path.empty())
    cfg = coachme::load_config_file(config_path);
  else
    coachme::finalize_config(cfg);
  coachme::apply_env_overrides(cfg, coachme::process_env());
  if (!data_dir.empty()) cfg.data_dir = data_dir;
  return cfg;
}

Service open_service(const ServiceConfig& cfg, const coachme::Clock& clock) {
  auto log = coachme::EventLog::open(cfg.data_dir);
  if (auto at = log.recovered_from_corruption())
    std::cerr << "recovered event log: dropped a torn line at seq " << *at << "\n";
  if (auto snap = coachme::latest_snapshot(cfg.data_dir)) {
    std::ifstream in(*snap);
    const auto j = nlohmann::json::parse(in);
    if (j.at("as_of_seq").get<std::int64_t>() <= log.last_seq()) return Service(cfg, std::move(log), clock, j);
    std::cerr << "ignoring snapshot ahead of the log: " << snap->string() << "\n";
  }
  return Service(cfg, std::move(log), clock);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coachme: caregiver service"};
  app.require_subcommand(1);
  std::string config_path, data_dir;
  app.add_option("--config", config_path, "service config JSON");
  app.add_option("--data-dir", data_dir, "directory holding events.ndjson and snapshots");

  auto* serve = app.add_subcommand("serve", "serve the HTTP API");
  int port = 0;
  serve->add_option("--port", port, "override the configured port");

  app.add_subcommand("bot", "read bot updates as NDJSON on stdin, write outbound messages as NDJSON");
  app.add_subcommand("snapshot", "replay the log and write a snapshot");
  auto* dump = app.add_subcommand("dump", "replay the log and print state and model exports");

  CLI11_PARSE(app, argc, argv);

  try {
    ServiceConfig cfg = load(config_path, data_dir);
    coachme::SystemClock clock;
    Service service = open_service(cfg, clock);

    if (*serve) {
      if (port > 0) cfg.port = port;
      std::cerr << "listening on " << cfg.host << ":" << cfg.port << "\n";
      coachme::serve(service, cfg.host, cfg.port);
    } else if (app.got_subcommand("bot")) {
      std::string line;
      while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        try {
          for (const auto& m : service.bot_update(line)) std::cout << coachme::serialize_outbound(m) << "\n";
        } catch (const coachme::Error& e) {
          std::cout << nlohmann::json{{"code", e.code()}, {"message", e.what()}}.dump() << "\n";
        }
        std::cout.flush();
      }
    } else if (app.got_subcommand("snapshot")) {
      coachme::write_snapshot(cfg.data_dir, service.snapshot_state());
      std::cout << "snapshot at seq " << service.version() << "\n";
    } else if (*dump) {
      const auto state = service.snapshot_state();
      nlohmann::json out{{"state", coachme::state_to_json(state)},
                         {"pre_model", coachme::export_model(state.models.pre)},
                         {"post_model", coachme::export_model(state.models.post)}};
      std::cout << out.dump(2) << "\n";
    }
    return 0;
  } catch (const coachme::Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
