#include "storyreel/gateway.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "storyreel/errors.hpp"
#include "storyreel/util.hpp"

namespace storyreel {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Role r) {
  switch (r) {
    case Role::Chat: return "chat";
    case Role::T2I: return "t2i";
    case Role::I2V: return "i2v";
    case Role::Judge: return "judge";
  }
  return "chat";
}

Role role_from_string(const std::string& s) {
  if (s == "chat") return Role::Chat;
  if (s == "t2i") return Role::T2I;
  if (s == "i2v") return Role::I2V;
  if (s == "judge") return Role::Judge;
  throw ConfigError("unknown endpoint role: " + s);
}

std::string GatewayRequest::matchable_text() const {
  std::string out;
  for (const auto& t : turns) {
    out += t.content;
    out += "\n";
    for (const auto& p : t.image_paths) {
      out += p;
      out += "\n";
    }
  }
  for (const auto& p : reference_paths) {
    out += p.string();
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// MockTransport
// ---------------------------------------------------------------------------

MockTransport::MockTransport(const fs::path& script_path)
    : MockTransport(json::parse(util::read_file(script_path))) {}

MockTransport::MockTransport(const json& script) {
  if (!script.is_array())
    throw ConfigError("mock script must be a JSON array of matcher/response pairs");
  for (const auto& e : script) {
    Entry entry;
    if (e.contains("substring")) entry.substring = e.at("substring").get<std::string>();
    if (e.contains("position")) entry.position = e.at("position").get<int>();
    if (!entry.substring && !entry.position)
      throw ConfigError("mock entry needs a 'substring' or 'position' matcher");
    entry.response = e.value("response", "");
    entry.reusable = e.value("reusable", false);
    entry.fail = e.value("fail", false);
    entries_.push_back(std::move(entry));
  }
}

GatewayResponse MockTransport::send(const EndpointContract&,
                                    const GatewayRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  ++request_counter_;
  const std::string text = request.matchable_text();
  for (auto& entry : entries_) {
    if (entry.used && !entry.reusable) continue;
    bool match = false;
    if (entry.position) match = *entry.position == request_counter_;
    else match = text.find(*entry.substring) != std::string::npos;
    if (!match) continue;
    entry.used = true;
    if (entry.fail) throw TransportError("mock-scripted transport failure");
    GatewayResponse resp;
    resp.text = entry.response;
    resp.binary = entry.response;
    return resp;
  }
  std::string preview = text.substr(0, 200);
  throw MockError("unmatched mock request (request #" +
                  std::to_string(request_counter_) + "): " + preview);
}

// ---------------------------------------------------------------------------
// HttpTransport
// ---------------------------------------------------------------------------

namespace {

std::string base64_encode(const std::string& in) {
  static const char* tbl =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 2 < in.size()) {
    unsigned v = (static_cast<unsigned char>(in[i]) << 16) |
                 (static_cast<unsigned char>(in[i + 1]) << 8) |
                 static_cast<unsigned char>(in[i + 2]);
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(tbl[(v >> 6) & 63]);
    out.push_back(tbl[v & 63]);
    i += 3;
  }
  if (i + 1 == in.size()) {
    unsigned v = static_cast<unsigned char>(in[i]) << 16;
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == in.size()) {
    unsigned v = (static_cast<unsigned char>(in[i]) << 16) |
                 (static_cast<unsigned char>(in[i + 1]) << 8);
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(tbl[(v >> 6) & 63]);
    out += "=";
  }
  return out;
}

const char* speaker_name(ChatTurn::Speaker s) {
  switch (s) {
    case ChatTurn::Speaker::System: return "system";
    case ChatTurn::Speaker::User: return "user";
    case ChatTurn::Speaker::Assistant: return "assistant";
  }
  return "user";
}

}  // namespace

GatewayResponse HttpTransport::send(const EndpointContract& contract,
                                    const GatewayRequest& request) {
  // Declared here to keep httplib out of public headers.
  extern GatewayResponse http_send(const EndpointContract&, const json&, Role,
                                   double);

  json body;
  body["model"] = contract.model_name;
  if (request.role == Role::Chat || request.role == Role::Judge) {
    body["messages"] = json::array();
    for (const auto& t : request.turns) {
      json msg;
      msg["role"] = speaker_name(t.speaker);
      if (t.image_paths.empty()) {
        msg["content"] = t.content;
      } else {
        json parts = json::array();
        parts.push_back({{"type", "text"}, {"text", t.content}});
        for (const auto& p : t.image_paths) {
          parts.push_back({{"type", "image"},
                           {"data", base64_encode(util::read_file(p))}});
        }
        msg["content"] = parts;
      }
      body["messages"].push_back(msg);
    }
  } else {
    std::string prompt;
    for (const auto& t : request.turns) prompt += t.content;
    body["prompt"] = prompt;
    body["references"] = json::array();
    for (const auto& p : request.reference_paths)
      body["references"].push_back(base64_encode(util::read_file(p.string())));
  }
  return http_send(contract, body, request.role, contract.poll_interval_s);
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

Gateway::Gateway()
    : sleeper_([](double s) {
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
      }) {}

void Gateway::set_transport(Role role, std::shared_ptr<Transport> transport) {
  std::lock_guard<std::mutex> lock(mu_);
  transports_[role] = std::move(transport);
}

void Gateway::set_sleeper(std::function<void(double)> sleeper) {
  sleeper_ = std::move(sleeper);
}

void Gateway::set_stage(const std::string& stage) {
  std::lock_guard<std::mutex> lock(mu_);
  stage_ = stage;
}

std::shared_ptr<Transport> Gateway::transport_for(const EndpointContract& contract) {
  std::lock_guard<std::mutex> lock(mu_);
  if (contract.mock_script) {
    // One transport per script path so entry consumption persists across calls.
    const std::string key = contract.mock_script->string();
    auto it = script_transports_.find(key);
    if (it == script_transports_.end()) {
      it = script_transports_
               .emplace(key, std::make_shared<MockTransport>(*contract.mock_script))
               .first;
    }
    return it->second;
  }
  auto it = transports_.find(contract.role);
  if (it != transports_.end()) return it->second;
  return std::make_shared<HttpTransport>();
}

GatewayResponse Gateway::dispatch(const EndpointContract& contract,
                                  const GatewayRequest& request) {
  auto transport = transport_for(contract);
  const std::string req_text = request.matchable_text();
  std::string last_error;
  for (int attempt = 0; attempt <= contract.max_retries; ++attempt) {
    if (attempt > 0)
      sleeper_(contract.backoff_base_s * std::pow(2.0, attempt - 1));
    try {
      GatewayResponse resp = transport->send(contract, request);
      std::lock_guard<std::mutex> lock(mu_);
      run_log_.push_back({request.role, stage_, req_text, resp.text});
      return resp;
    } catch (const TransportError& e) {
      last_error = e.what();
      std::lock_guard<std::mutex> lock(mu_);
      run_log_.push_back({request.role, stage_, req_text,
                          std::string("<transport error: ") + e.what() + ">"});
    }
    // MockError and everything else propagates: only transport-level
    // failures are retried.
  }
  throw TransportError("retries exhausted (" +
                       std::to_string(contract.max_retries + 1) +
                       " attempts): " + last_error);
}

std::string Gateway::chat(const EndpointContract& contract,
                          const std::vector<ChatTurn>& turns) {
  if (turns.empty()) throw Error("chat: turns must be non-empty");
  GatewayRequest req;
  req.role = contract.role;
  req.turns = turns;
  return dispatch(contract, req).text;
}

ReferenceAsset Gateway::generate_image(const EndpointContract& contract,
                                       const std::string& prompt,
                                       const fs::path& out) {
  if (contract.role != Role::T2I)
    throw ConfigError("generate_image requires a t2i contract");
  GatewayRequest req;
  req.role = Role::T2I;
  req.turns.push_back({ChatTurn::Speaker::User, prompt, {}});
  GatewayResponse resp = dispatch(contract, req);
  util::atomic_write(out, resp.binary);
  ReferenceAsset asset;
  asset.image_path = out.string();
  asset.prompt_used = prompt;
  return asset;
}

ClipRecord Gateway::generate_video(const EndpointContract& contract,
                                   const std::string& prompt,
                                   const std::vector<fs::path>& reference_paths,
                                   const fs::path& out, const Probe& probe) {
  if (contract.role != Role::I2V)
    throw ConfigError("generate_video requires an i2v contract");
  for (const auto& p : reference_paths) {
    if (!fs::exists(p))
      throw Error("generate_video: missing reference image: " + p.string());
  }
  GatewayRequest req;
  req.role = Role::I2V;
  req.turns.push_back({ChatTurn::Speaker::User, prompt, {}});
  req.reference_paths = reference_paths;
  GatewayResponse resp = dispatch(contract, req);
  util::atomic_write(out, resp.binary);
  ClipRecord record;
  record.video_path = out.string();
  record.status = ClipStatus::Rendered;
  if (probe) probe(out, record);
  return record;
}

int Gateway::request_count(const std::string& stage) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (stage.empty()) return static_cast<int>(run_log_.size());
  int n = 0;
  for (const auto& e : run_log_)
    if (e.stage == stage) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Structured-output extraction
// ---------------------------------------------------------------------------

nlohmann::json extract_structured(const std::string& raw) {
  // Single repair pass: drop fence lines, then take the first balanced
  // top-level object, string- and escape-aware.
  std::string text;
  text.reserve(raw.size());
  size_t pos = 0;
  while (pos < raw.size()) {
    size_t eol = raw.find('\n', pos);
    if (eol == std::string::npos) eol = raw.size();
    std::string line = raw.substr(pos, eol - pos);
    if (util::trim(line).rfind("```", 0) != 0) {
      text += line;
      text += "\n";
    }
    pos = eol + 1;
  }

  size_t start = text.find('{');
  while (start != std::string::npos) {
    int depth = 0;
    bool in_string = false;
    bool escape = false;
    for (size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (escape) { escape = false; continue; }
      if (c == '\\') { escape = true; continue; }
      if (c == '"') { in_string = !in_string; continue; }
      if (in_string) continue;
      if (c == '{') ++depth;
      else if (c == '}') {
        --depth;
        if (depth == 0) {
          std::string candidate = text.substr(start, i - start + 1);
          try {
            return nlohmann::json::parse(candidate);
          } catch (const std::exception&) {
            break;  // balanced but unparsable; try the next opening brace
          }
        }
      }
    }
    start = text.find('{', start + 1);
  }
  throw ParseError("no balanced JSON object found in model output", raw);
}

}  // namespace storyreel
