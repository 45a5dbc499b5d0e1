#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "vbench/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "httplib.h"

namespace vbench::gateway {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? std::string(v) : fallback;
}

}  // namespace

ProviderKind ModelConfig::kind() const {
  if (provider == "synthetic") return ProviderKind::Synthetic;
  if (provider == "ollama") return ProviderKind::LocalRuntime;
  return ProviderKind::RemoteHttp;
}

const std::vector<ModelConfig>& default_model_configs() {
  static const std::vector<ModelConfig> kConfigs = {
      {"gpt-5.2", "openai", "gpt-5.2", 2200, 0.0, 120.0},
      {"claude-4.5-sonnet", "anthropic", "claude-sonnet-4-5-20250929", 2200, 0.0, 120.0},
      {"gemini-3-pro", "google", "gemini-3-pro-preview", 2200, 0.0, 120.0},
      {"deepseek-v1-ollama", "ollama", "deepseek-r1:latest", 1800, 0.0, 120.0},
  };
  return kConfigs;
}

std::optional<ModelConfig> model_config_by_label(const std::string& label) {
  for (const auto& c : default_model_configs()) {
    if (c.label == label) return c;
  }
  return std::nullopt;
}

std::vector<std::string> default_model_labels() {
  std::vector<std::string> labels;
  for (const auto& c : default_model_configs()) labels.push_back(c.label);
  return labels;
}

nlohmann::json openai_request_body(const protocol::PromptBundle& bundle,
                                   const ModelConfig& config) {
  return nlohmann::json{
      {"model", config.model_identifier},
      {"messages",
       nlohmann::json::array({
           nlohmann::json{{"role", "system"}, {"content", bundle.system_text}},
           nlohmann::json{{"role", "user"}, {"content", bundle.user_text}},
       })},
      {"temperature", config.temperature},
      {"max_tokens", config.max_output_tokens},
  };
}

nlohmann::json anthropic_request_body(const protocol::PromptBundle& bundle,
                                      const ModelConfig& config) {
  return nlohmann::json{
      {"model", config.model_identifier},
      {"max_tokens", config.max_output_tokens},
      {"temperature", config.temperature},
      {"system", bundle.system_text},
      {"messages",
       nlohmann::json::array({
           nlohmann::json{{"role", "user"}, {"content", bundle.user_text}},
       })},
  };
}

nlohmann::json google_request_body(const protocol::PromptBundle& bundle,
                                   const ModelConfig& config) {
  return nlohmann::json{
      {"system_instruction",
       nlohmann::json{{"parts", nlohmann::json::array({
                                    nlohmann::json{{"text", bundle.system_text}},
                                })}}},
      {"contents",
       nlohmann::json::array({
           nlohmann::json{{"role", "user"},
                          {"parts", nlohmann::json::array({
                                        nlohmann::json{{"text", bundle.user_text}},
                                    })}},
       })},
      {"generationConfig",
       nlohmann::json{{"temperature", config.temperature},
                      {"maxOutputTokens", config.max_output_tokens}}},
  };
}

nlohmann::json ollama_request_body(const protocol::PromptBundle& bundle,
                                   const ModelConfig& config) {
  return nlohmann::json{
      {"model", config.model_identifier},
      {"messages",
       nlohmann::json::array({
           nlohmann::json{{"role", "system"}, {"content", bundle.system_text}},
           nlohmann::json{{"role", "user"}, {"content", bundle.user_text}},
       })},
      {"stream", false},
      {"options",
       nlohmann::json{{"temperature", config.temperature},
                      {"num_predict", config.max_output_tokens}}},
  };
}

std::optional<WireReply> openai_read_reply(const nlohmann::json& body) {
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    return std::nullopt;
  }
  const auto& msg = body["choices"][0];
  if (!msg.contains("message") || !msg["message"].contains("content") ||
      !msg["message"]["content"].is_string()) {
    return std::nullopt;
  }
  WireReply reply;
  reply.text = msg["message"]["content"].get<std::string>();
  if (body.contains("usage") && body["usage"].is_object()) {
    reply.input_tokens = body["usage"].value("prompt_tokens", 0L);
    reply.output_tokens = body["usage"].value("completion_tokens", 0L);
  }
  return reply;
}

std::optional<WireReply> anthropic_read_reply(const nlohmann::json& body) {
  if (!body.contains("content") || !body["content"].is_array()) return std::nullopt;
  std::string text;
  for (const auto& block : body["content"]) {
    if (block.value("type", "") == "text" && block.contains("text") &&
        block["text"].is_string()) {
      text += block["text"].get<std::string>();
    }
  }
  if (text.empty()) return std::nullopt;
  WireReply reply;
  reply.text = text;
  if (body.contains("usage") && body["usage"].is_object()) {
    reply.input_tokens = body["usage"].value("input_tokens", 0L);
    reply.output_tokens = body["usage"].value("output_tokens", 0L);
  }
  return reply;
}

std::optional<WireReply> google_read_reply(const nlohmann::json& body) {
  if (!body.contains("candidates") || !body["candidates"].is_array() ||
      body["candidates"].empty()) {
    return std::nullopt;
  }
  const auto& cand = body["candidates"][0];
  if (!cand.contains("content") || !cand["content"].contains("parts") ||
      !cand["content"]["parts"].is_array()) {
    return std::nullopt;
  }
  std::string text;
  for (const auto& part : cand["content"]["parts"]) {
    if (part.contains("text") && part["text"].is_string()) {
      text += part["text"].get<std::string>();
    }
  }
  if (text.empty()) return std::nullopt;
  WireReply reply;
  reply.text = text;
  // This provider sometimes reports zero token counts; pass them through as-is.
  if (body.contains("usageMetadata") && body["usageMetadata"].is_object()) {
    reply.input_tokens = body["usageMetadata"].value("promptTokenCount", 0L);
    reply.output_tokens = body["usageMetadata"].value("candidatesTokenCount", 0L);
  }
  return reply;
}

std::optional<WireReply> ollama_read_reply(const nlohmann::json& body) {
  if (!body.contains("message") || !body["message"].contains("content") ||
      !body["message"]["content"].is_string()) {
    return std::nullopt;
  }
  WireReply reply;
  reply.text = body["message"]["content"].get<std::string>();
  reply.input_tokens = body.value("prompt_eval_count", 0L);
  reply.output_tokens = body.value("eval_count", 0L);
  return reply;
}

namespace {

struct Endpoint {
  std::string base_url;
  std::string path;
  httplib::Headers headers;
  std::string missing_credential;  // non-empty when a required credential is absent
};

Endpoint resolve_endpoint(const std::string& provider, const ModelConfig& config,
                          const std::string& base_url_override) {
  Endpoint ep;
  if (provider == "openai") {
    ep.base_url = base_url_override.empty() ? "https://api.openai.com" : base_url_override;
    ep.path = "/v1/chat/completions";
    std::string key = env_or("OPENAI_API_KEY", "");
    if (key.empty()) {
      ep.missing_credential = "OPENAI_API_KEY is not set";
    } else {
      ep.headers.emplace("Authorization", "Bearer " + key);
    }
  } else if (provider == "anthropic") {
    ep.base_url = base_url_override.empty() ? "https://api.anthropic.com" : base_url_override;
    ep.path = "/v1/messages";
    std::string key = env_or("ANTHROPIC_API_KEY", "");
    if (key.empty()) {
      ep.missing_credential = "ANTHROPIC_API_KEY is not set";
    } else {
      ep.headers.emplace("x-api-key", key);
      ep.headers.emplace("anthropic-version", "2023-06-01");
    }
  } else if (provider == "google") {
    ep.base_url =
        base_url_override.empty() ? "https://generativelanguage.googleapis.com" : base_url_override;
    std::string key = env_or("GOOGLE_API_KEY", "");
    if (key.empty()) {
      ep.missing_credential = "GOOGLE_API_KEY is not set";
    }
    ep.path = "/v1beta/models/" + config.model_identifier + ":generateContent?key=" + key;
  } else if (provider == "ollama") {
    ep.base_url =
        base_url_override.empty() ? env_or("OLLAMA_BASE_URL", "http://localhost:11434")
                                  : base_url_override;
    ep.path = "/api/chat";
  } else {
    throw std::invalid_argument("unknown provider: " + provider);
  }
  return ep;
}

class RemoteBackend : public ModelBackend {
 public:
  RemoteBackend(std::string provider, std::string base_url_override)
      : provider_(std::move(provider)), base_url_override_(std::move(base_url_override)) {}

  RawResponse send(const protocol::PromptBundle& bundle, const ModelConfig& config) override {
    RawResponse out;
    Endpoint ep = resolve_endpoint(provider_, config, base_url_override_);
    if (!ep.missing_credential.empty()) {
      out.error_detail = ep.missing_credential;
      return out;
    }

    ModelConfig effective = config;
    if (provider_ == "ollama") {
      effective.model_identifier = env_or("OLLAMA_DEEPSEEK_MODEL", config.model_identifier);
    }

    nlohmann::json body;
    if (provider_ == "openai") {
      body = openai_request_body(bundle, effective);
    } else if (provider_ == "anthropic") {
      body = anthropic_request_body(bundle, effective);
    } else if (provider_ == "google") {
      body = google_request_body(bundle, effective);
    } else {
      body = ollama_request_body(bundle, effective);
    }

    httplib::Client client(ep.base_url);
    auto timeout = std::chrono::duration<double>(config.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));

    auto started = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(ep.path, ep.headers, body.dump(), "application/json");
    auto elapsed = std::chrono::steady_clock::now() - started;
    out.latency_ms = std::max<long>(
        1, std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());

    if (!res) {
      out.error_detail = "transport error: " + httplib::to_string(res.error());
      return out;
    }
    if (res->status < 200 || res->status >= 300) {
      out.error_detail = "http status " + std::to_string(res->status);
      return out;
    }

    nlohmann::json reply_body = nlohmann::json::parse(res->body, nullptr, false);
    if (reply_body.is_discarded()) {
      out.error_detail = "unparseable reply body";
      return out;
    }

    std::optional<WireReply> reply;
    if (provider_ == "openai") {
      reply = openai_read_reply(reply_body);
    } else if (provider_ == "anthropic") {
      reply = anthropic_read_reply(reply_body);
    } else if (provider_ == "google") {
      reply = google_read_reply(reply_body);
    } else {
      reply = ollama_read_reply(reply_body);
    }
    if (!reply) {
      out.error_detail = "reply body missing completion text";
      return out;
    }

    out.text = reply->text;
    out.input_tokens = reply->input_tokens;
    out.output_tokens = reply->output_tokens;
    out.api_success = true;
    return out;
  }

 private:
  std::string provider_;
  std::string base_url_override_;
};

}  // namespace

std::unique_ptr<ModelBackend> make_remote_backend(const std::string& provider,
                                                  const std::string& base_url_override) {
  if (provider != "openai" && provider != "anthropic" && provider != "google" &&
      provider != "ollama") {
    throw std::invalid_argument("unknown provider: " + provider);
  }
  return std::make_unique<RemoteBackend>(provider, base_url_override);
}

GatewayConfig default_gateway_config(int phase) {
  if (phase == 2) return GatewayConfig{3, 0.15};
  return GatewayConfig{2, 0.2};
}

Gateway::Gateway(GatewayConfig config)
    : config_(config), slots_(std::max(1, config.max_concurrency)) {}

void Gateway::register_model(const ModelConfig& config, std::shared_ptr<ModelBackend> backend) {
  if (!backend) throw std::invalid_argument("null backend for model " + config.label);
  models_[config.label] = Entry{config, std::move(backend)};
}

bool Gateway::has_model(const std::string& label) const { return models_.count(label) > 0; }

const ModelConfig& Gateway::model_config(const std::string& label) const {
  return models_.at(label).config;
}

void Gateway::pace(const std::string& label) {
  auto delay = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(config_.rate_limit_delay_s));
  std::chrono::steady_clock::time_point dispatch_at;
  {
    std::lock_guard<std::mutex> lock(pace_mu_);
    auto now = std::chrono::steady_clock::now();
    auto it = next_dispatch_.find(label);
    dispatch_at = (it == next_dispatch_.end()) ? now : std::max(now, it->second);
    next_dispatch_[label] = dispatch_at + delay;
  }
  std::this_thread::sleep_until(dispatch_at);
}

RawResponse Gateway::send(const protocol::PromptBundle& bundle, const std::string& model_label) {
  auto it = models_.find(model_label);
  if (it == models_.end()) {
    throw std::out_of_range("model not registered: " + model_label);
  }

  slots_.acquire();
  struct SlotGuard {
    std::counting_semaphore<>& s;
    ~SlotGuard() { s.release(); }
  } guard{slots_};

  pace(model_label);
  return it->second.backend->send(bundle, it->second.config);
}

}  // namespace vbench::gateway
