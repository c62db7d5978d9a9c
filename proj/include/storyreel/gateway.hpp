#ifndef STORYREEL_GATEWAY_HPP_
#define STORYREEL_GATEWAY_HPP_

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "storyreel/storyboard.hpp"

namespace storyreel {

// ---------------------------------------------------------------------------
// Uniform client layer for the four remote model roles. All roles speak one
// request shape (chat-style turns, optional binary response); retries, mock
// scripts and request logging live in one place.
// ---------------------------------------------------------------------------

enum class Role { Chat, T2I, I2V, Judge };

const char* to_string(Role r);
Role role_from_string(const std::string& s);

struct EndpointContract {
  Role role = Role::Chat;
  std::string base_url;
  std::string model_name;
  double timeout_s = 120.0;
  int max_retries = 2;          // retries after the first attempt
  double backoff_base_s = 0.5;  // sleep = backoff_base * 2^attempt
  double poll_interval_s = 2.0;
  std::string api_key_env;      // env var holding the key; never the key itself
  std::optional<std::filesystem::path> mock_script;
};

struct ChatTurn {
  enum class Speaker { System, User, Assistant };
  Speaker speaker = Speaker::User;
  std::string content;
  std::vector<std::string> image_paths;  // attachments, judge/t2i/i2v roles
};

struct GatewayRequest {
  Role role = Role::Chat;
  std::vector<ChatTurn> turns;
  std::vector<std::filesystem::path> reference_paths;  // i2v conditioning images

  // All text content concatenated; what mock matchers run against.
  std::string matchable_text() const;
};

struct GatewayResponse {
  std::string text;    // assistant text (chat/judge)
  std::string binary;  // payload bytes (t2i/i2v)
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual GatewayResponse send(const EndpointContract& contract,
                               const GatewayRequest& request) = 0;
};

// Scripted offline backend. Entries are consumed in order of first match;
// a request matching no live entry fails the run.
class MockTransport : public Transport {
 public:
  explicit MockTransport(const std::filesystem::path& script_path);
  explicit MockTransport(const nlohmann::json& script);
  GatewayResponse send(const EndpointContract&, const GatewayRequest&) override;

 private:
  struct Entry {
    std::optional<std::string> substring;
    std::optional<int> position;  // 1-based request ordinal
    std::string response;
    bool reusable = false;
    bool fail = false;  // simulate a transport failure for this match
    bool used = false;
  };
  std::vector<Entry> entries_;
  int request_counter_ = 0;
  std::mutex mu_;
};

// Live HTTP backend: chat-completions wire format for chat/judge, prompt +
// base64 references with an optional job-id poll loop for t2i/i2v.
class HttpTransport : public Transport {
 public:
  GatewayResponse send(const EndpointContract&, const GatewayRequest&) override;
};

struct RunLogEntry {
  Role role = Role::Chat;
  std::string stage;
  std::string request_text;
  std::string response_text;
};

class Gateway {
 public:
  Gateway();

  // Tests inject a transport per role; otherwise one is built per contract
  // (mock_script set -> MockTransport, else HttpTransport).
  void set_transport(Role role, std::shared_ptr<Transport> transport);
  void set_sleeper(std::function<void(double)> sleeper);
  void set_stage(const std::string& stage);

  std::string chat(const EndpointContract& contract,
                   const std::vector<ChatTurn>& turns);

  ReferenceAsset generate_image(const EndpointContract& contract,
                                const std::string& prompt,
                                const std::filesystem::path& out);

  using Probe = std::function<void(const std::filesystem::path&, ClipRecord&)>;

  ClipRecord generate_video(const EndpointContract& contract,
                            const std::string& prompt,
                            const std::vector<std::filesystem::path>& reference_paths,
                            const std::filesystem::path& out,
                            const Probe& probe);

  const std::vector<RunLogEntry>& run_log() const { return run_log_; }
  int request_count(const std::string& stage = "") const;

 private:
  GatewayResponse dispatch(const EndpointContract& contract,
                           const GatewayRequest& request);
  std::shared_ptr<Transport> transport_for(const EndpointContract& contract);

  std::map<Role, std::shared_ptr<Transport>> transports_;
  std::map<std::string, std::shared_ptr<Transport>> script_transports_;
  std::function<void(double)> sleeper_;
  std::string stage_;
  std::vector<RunLogEntry> run_log_;
  mutable std::mutex mu_;
};

// Strips code fences, locates the first balanced top-level object in `raw`
// and parses it. Exactly one repair pass; no semantic guessing.
nlohmann::json extract_structured(const std::string& raw);

}  // namespace storyreel

#endif  // STORYREEL_GATEWAY_HPP_
