#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "json.hpp"
#include "vbench/protocol.hpp"

namespace vbench::gateway {

enum class ProviderKind { RemoteHttp, LocalRuntime, Synthetic };

struct ModelConfig {
  std::string label;             // study-facing name, e.g. "gpt-5.2"
  std::string provider;          // "openai", "anthropic", "google", "ollama", "synthetic"
  std::string model_identifier;  // provider wire identifier
  int max_output_tokens = 2048;
  double temperature = 0.0;
  double timeout_s = 120.0;  // per-request timeout

  ProviderKind kind() const;
};

// The four study model configurations.
const std::vector<ModelConfig>& default_model_configs();
std::optional<ModelConfig> model_config_by_label(const std::string& label);
std::vector<std::string> default_model_labels();

struct RawResponse {
  std::string text;
  long latency_ms = 0;  // > 0 whenever api_success
  long input_tokens = 0;
  long output_tokens = 0;
  bool api_success = false;
  std::string error_detail;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  // Never throws for request/content failures; they come back as
  // api_success=false with error_detail. No retries are attempted.
  virtual RawResponse send(const protocol::PromptBundle& bundle, const ModelConfig& config) = 0;
};

// Remote/local-runtime backend for one provider. base_url_override is for
// tests and self-hosted endpoints; credentials come from the environment
// (OPENAI_API_KEY, ANTHROPIC_API_KEY, GOOGLE_API_KEY, OLLAMA_BASE_URL,
// OLLAMA_DEEPSEEK_MODEL).
std::unique_ptr<ModelBackend> make_remote_backend(const std::string& provider,
                                                  const std::string& base_url_override = "");

// Wire-format builders and reply readers, exposed so request/response shapes
// are testable without a network.
nlohmann::json openai_request_body(const protocol::PromptBundle&, const ModelConfig&);
nlohmann::json anthropic_request_body(const protocol::PromptBundle&, const ModelConfig&);
nlohmann::json google_request_body(const protocol::PromptBundle&, const ModelConfig&);
nlohmann::json ollama_request_body(const protocol::PromptBundle&, const ModelConfig&);

struct WireReply {
  std::string text;
  long input_tokens = 0;
  long output_tokens = 0;
};
std::optional<WireReply> openai_read_reply(const nlohmann::json& body);
std::optional<WireReply> anthropic_read_reply(const nlohmann::json& body);
std::optional<WireReply> google_read_reply(const nlohmann::json& body);
std::optional<WireReply> ollama_read_reply(const nlohmann::json& body);

struct GatewayConfig {
  int max_concurrency = 2;        // bound on in-flight sends
  double rate_limit_delay_s = 0.2;  // minimum spacing between dispatches per model
};

// Phase defaults: concurrency 2 / delay 0.2s for phase 1, 3 / 0.15s for phase 2.
GatewayConfig default_gateway_config(int phase);

// Routes sends to registered per-model backends while enforcing the in-flight
// bound (counting semaphore) and per-model dispatch pacing.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config);

  void register_model(const ModelConfig& config, std::shared_ptr<ModelBackend> backend);
  bool has_model(const std::string& label) const;
  const ModelConfig& model_config(const std::string& label) const;  // throws std::out_of_range

  RawResponse send(const protocol::PromptBundle& bundle, const std::string& model_label);

  const GatewayConfig& config() const { return config_; }

 private:
  void pace(const std::string& label);

  GatewayConfig config_;
  std::counting_semaphore<> slots_;
  std::mutex pace_mu_;
  std::map<std::string, std::chrono::steady_clock::time_point> next_dispatch_;
  struct Entry {
    ModelConfig config;
    std::shared_ptr<ModelBackend> backend;
  };
  std::map<std::string, Entry> models_;
};

}  // namespace vbench::gateway
