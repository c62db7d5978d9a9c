// Live HTTP path, kept in its own TU so httplib stays out of the headers.
// Exercised by manual smoke runs only; CI runs everything against mocks.

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "storyreel/errors.hpp"
#include "storyreel/gateway.hpp"

namespace storyreel {

using nlohmann::json;

GatewayResponse http_send(const EndpointContract& contract, const json& body,
                          Role role, double poll_interval_s) {
  httplib::Client client(contract.base_url);
  client.set_read_timeout(static_cast<time_t>(contract.timeout_s), 0);
  httplib::Headers headers;
  if (!contract.api_key_env.empty()) {
    const char* key = std::getenv(contract.api_key_env.c_str());
    if (!key)
      throw ConfigError("API key env var not set: " + contract.api_key_env);
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string path =
      (role == Role::Chat || role == Role::Judge) ? "/v1/chat/completions"
                                                  : "/v1/generate";
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res)
    throw TransportError("no response from " + contract.base_url + path);
  if (res->status >= 500 || res->status == 429)
    throw TransportError("server error " + std::to_string(res->status));
  if (res->status != 200)
    throw Error("endpoint rejected request with status " +
                std::to_string(res->status) + ": " + res->body);

  GatewayResponse out;
  if (role == Role::Chat || role == Role::Judge) {
    json reply = json::parse(res->body);
    out.text = reply.at("choices").at(0).at("message").at("content");
    return out;
  }

  // Binary roles: either immediate bytes or a job-id poll loop.
  if (res->get_header_value("Content-Type").rfind("application/json", 0) == 0) {
    json reply = json::parse(res->body);
    if (reply.contains("job_id")) {
      const std::string job = reply.at("job_id");
      for (;;) {
        std::this_thread::sleep_for(
            std::chrono::duration<double>(poll_interval_s));
        auto poll = client.Get("/v1/jobs/" + job, headers);
        if (!poll) throw TransportError("poll failed for job " + job);
        if (poll->status >= 500) throw TransportError("poll server error");
        json status = json::parse(poll->body);
        const std::string state = status.value("status", "");
        if (state == "failed")
          throw TransportError("job failed: " + status.value("error", ""));
        if (state == "done") {
          auto fetch = client.Get("/v1/jobs/" + job + "/result", headers);
          if (!fetch || fetch->status != 200)
            throw TransportError("result fetch failed for job " + job);
          out.binary = fetch->body;
          return out;
        }
      }
    }
  }
  out.binary = res->body;
  return out;
}

}  // namespace storyreel
