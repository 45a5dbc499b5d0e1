#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vbench/gateway.hpp"

using namespace vbench;
using nlohmann::json;

namespace {

protocol::PromptBundle sample_bundle() {
  protocol::PromptBundle b;
  b.system_text = "system text";
  b.user_text = "user text";
  b.mitigation_id = "BASELINE";
  b.condition_code = "CONTROL";
  b.vignette_id = "vig_1";
  return b;
}

gateway::ModelConfig config_for(const std::string& label) {
  auto c = gateway::model_config_by_label(label);
  EXPECT_TRUE(c.has_value()) << label;
  return *c;
}

// Backend that records call instants and concurrent occupancy.
class RecordingBackend : public gateway::ModelBackend {
 public:
  gateway::RawResponse send(const protocol::PromptBundle&, const gateway::ModelConfig&) override {
    const int now_active = ++active_;
    int seen = max_active_.load();
    while (now_active > seen && !max_active_.compare_exchange_weak(seen, now_active)) {
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      call_times_.push_back(std::chrono::steady_clock::now());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(hold_ms_));
    --active_;
    gateway::RawResponse r;
    r.text = "{}";
    r.latency_ms = 1;
    r.api_success = true;
    return r;
  }

  std::vector<std::chrono::steady_clock::time_point> call_times() {
    std::lock_guard<std::mutex> lock(mu_);
    return call_times_;
  }
  int max_active() const { return max_active_.load(); }
  void set_hold_ms(int ms) { hold_ms_ = ms; }

 private:
  std::mutex mu_;
  std::vector<std::chrono::steady_clock::time_point> call_times_;
  std::atomic<int> active_{0};
  std::atomic<int> max_active_{0};
  int hold_ms_ = 0;
};

}  // namespace

TEST(ModelConfigs, StudyRoster) {
  const auto& configs = gateway::default_model_configs();
  ASSERT_EQ(configs.size(), 4u);
  EXPECT_EQ(configs[0].label, "gpt-5.2");
  EXPECT_EQ(configs[0].provider, "openai");
  EXPECT_EQ(configs[0].model_identifier, "gpt-5.2");
  EXPECT_EQ(configs[0].max_output_tokens, 2200);
  EXPECT_EQ(configs[1].label, "claude-4.5-sonnet");
  EXPECT_EQ(configs[1].provider, "anthropic");
  EXPECT_EQ(configs[1].model_identifier, "claude-sonnet-4-5-20250929");
  EXPECT_EQ(configs[2].label, "gemini-3-pro");
  EXPECT_EQ(configs[2].provider, "google");
  EXPECT_EQ(configs[2].model_identifier, "gemini-3-pro-preview");
  EXPECT_EQ(configs[3].label, "deepseek-v1-ollama");
  EXPECT_EQ(configs[3].provider, "ollama");
  EXPECT_EQ(configs[3].model_identifier, "deepseek-r1:latest");
  EXPECT_EQ(configs[3].max_output_tokens, 1800);
  for (const auto& c : configs) {
    EXPECT_DOUBLE_EQ(c.temperature, 0.0);
    EXPECT_DOUBLE_EQ(c.timeout_s, 120.0);
  }

  EXPECT_EQ(gateway::default_model_labels(),
            (std::vector<std::string>{"gpt-5.2", "claude-4.5-sonnet", "gemini-3-pro",
                                      "deepseek-v1-ollama"}));
  EXPECT_FALSE(gateway::model_config_by_label("gpt-4").has_value());
  EXPECT_EQ(configs[0].kind(), gateway::ProviderKind::RemoteHttp);
  EXPECT_EQ(configs[3].kind(), gateway::ProviderKind::LocalRuntime);
}

TEST(ModelConfigs, PhaseDefaults) {
  const auto p1 = gateway::default_gateway_config(1);
  EXPECT_EQ(p1.max_concurrency, 2);
  EXPECT_DOUBLE_EQ(p1.rate_limit_delay_s, 0.2);
  const auto p2 = gateway::default_gateway_config(2);
  EXPECT_EQ(p2.max_concurrency, 3);
  EXPECT_DOUBLE_EQ(p2.rate_limit_delay_s, 0.15);
}

TEST(WireFormat, OpenAiRequestBody) {
  const auto body = gateway::openai_request_body(sample_bundle(), config_for("gpt-5.2"));
  const json expected{
      {"model", "gpt-5.2"},
      {"messages", json::array({json{{"role", "system"}, {"content", "system text"}},
                                json{{"role", "user"}, {"content", "user text"}}})},
      {"temperature", 0.0},
      {"max_tokens", 2200},
  };
  EXPECT_EQ(body, expected);
}

TEST(WireFormat, AnthropicRequestBody) {
  const auto body = gateway::anthropic_request_body(sample_bundle(), config_for("claude-4.5-sonnet"));
  const json expected{
      {"model", "claude-sonnet-4-5-20250929"},
      {"max_tokens", 2200},
      {"temperature", 0.0},
      {"system", "system text"},
      {"messages", json::array({json{{"role", "user"}, {"content", "user text"}}})},
  };
  EXPECT_EQ(body, expected);
}

TEST(WireFormat, GoogleRequestBody) {
  const auto body = gateway::google_request_body(sample_bundle(), config_for("gemini-3-pro"));
  const json expected{
      {"system_instruction", json{{"parts", json::array({json{{"text", "system text"}}})}}},
      {"contents",
       json::array({json{{"role", "user"},
                         {"parts", json::array({json{{"text", "user text"}}})}}})},
      {"generationConfig", json{{"temperature", 0.0}, {"maxOutputTokens", 2200}}},
  };
  EXPECT_EQ(body, expected);
}

TEST(WireFormat, OllamaRequestBody) {
  const auto body = gateway::ollama_request_body(sample_bundle(), config_for("deepseek-v1-ollama"));
  const json expected{
      {"model", "deepseek-r1:latest"},
      {"messages", json::array({json{{"role", "system"}, {"content", "system text"}},
                                json{{"role", "user"}, {"content", "user text"}}})},
      {"stream", false},
      {"options", json{{"temperature", 0.0}, {"num_predict", 1800}}},
  };
  EXPECT_EQ(body, expected);
}

TEST(WireFormat, OpenAiReadReply) {
  const json good{
      {"choices", json::array({json{{"message", json{{"content", "hello"}}}}})},
      {"usage", json{{"prompt_tokens", 12}, {"completion_tokens", 7}}},
  };
  const auto reply = gateway::openai_read_reply(good);
  ASSERT_TRUE(reply.has_value());
  EXPECT_EQ(reply->text, "hello");
  EXPECT_EQ(reply->input_tokens, 12);
  EXPECT_EQ(reply->output_tokens, 7);

  EXPECT_FALSE(gateway::openai_read_reply(json{{"choices", json::array()}}).has_value());
  EXPECT_FALSE(gateway::openai_read_reply(json::object()).has_value());
}

TEST(WireFormat, AnthropicReadReplyJoinsTextBlocks) {
  const json good{
      {"content", json::array({json{{"type", "text"}, {"text", "part one "}},
                               json{{"type", "tool_use"}, {"id", "x"}},
                               json{{"type", "text"}, {"text", "part two"}}})},
      {"usage", json{{"input_tokens", 40}, {"output_tokens", 9}}},
  };
  const auto reply = gateway::anthropic_read_reply(good);
  ASSERT_TRUE(reply.has_value());
  EXPECT_EQ(reply->text, "part one part two");
  EXPECT_EQ(reply->input_tokens, 40);
  EXPECT_EQ(reply->output_tokens, 9);

  EXPECT_FALSE(gateway::anthropic_read_reply(json{{"content", json::array()}}).has_value());
}

TEST(WireFormat, GoogleReadReply) {
  const json good{
      {"candidates",
       json::array({json{{"content",
                          json{{"parts", json::array({json{{"text", "alpha"}},
                                                      json{{"text", " beta"}}})}}}}})},
      {"usageMetadata", json{{"promptTokenCount", 33}, {"candidatesTokenCount", 4}}},
  };
  const auto reply = gateway::google_read_reply(good);
  ASSERT_TRUE(reply.has_value());
  EXPECT_EQ(reply->text, "alpha beta");
  EXPECT_EQ(reply->input_tokens, 33);
  EXPECT_EQ(reply->output_tokens, 4);

  // Missing usage metadata passes through as zero counts, still a success.
  const json no_usage{
      {"candidates",
       json::array({json{{"content", json{{"parts", json::array({json{{"text", "x"}}})}}}}})},
  };
  const auto bare = gateway::google_read_reply(no_usage);
  ASSERT_TRUE(bare.has_value());
  EXPECT_EQ(bare->input_tokens, 0);
  EXPECT_FALSE(gateway::google_read_reply(json{{"candidates", json::array()}}).has_value());
}

TEST(WireFormat, OllamaReadReply) {
  const json good{
      {"message", json{{"role", "assistant"}, {"content", "done"}}},
      {"prompt_eval_count", 21},
      {"eval_count", 5},
  };
  const auto reply = gateway::ollama_read_reply(good);
  ASSERT_TRUE(reply.has_value());
  EXPECT_EQ(reply->text, "done");
  EXPECT_EQ(reply->input_tokens, 21);
  EXPECT_EQ(reply->output_tokens, 5);
  EXPECT_FALSE(gateway::ollama_read_reply(json::object()).has_value());
}

TEST(RemoteBackend, UnknownProviderThrows) {
  EXPECT_THROW(gateway::make_remote_backend("azure"), std::invalid_argument);
}

TEST(RemoteBackend, MissingCredentialFailsWithoutNetwork) {
  ::unsetenv("OPENAI_API_KEY");
  ::unsetenv("ANTHROPIC_API_KEY");
  ::unsetenv("GOOGLE_API_KEY");
  const struct {
    const char* provider;
    const char* label;
    const char* expected;
  } cases[] = {
      {"openai", "gpt-5.2", "OPENAI_API_KEY is not set"},
      {"anthropic", "claude-4.5-sonnet", "ANTHROPIC_API_KEY is not set"},
      {"google", "gemini-3-pro", "GOOGLE_API_KEY is not set"},
  };
  for (const auto& c : cases) {
    auto backend = gateway::make_remote_backend(c.provider);
    const auto out = backend->send(sample_bundle(), config_for(c.label));
    EXPECT_FALSE(out.api_success) << c.provider;
    EXPECT_EQ(out.error_detail, c.expected) << c.provider;
    EXPECT_TRUE(out.text.empty());
  }
}

TEST(RemoteBackend, TransportErrorReported) {
  // Nothing listens on this port; the connection is refused immediately.
  auto backend = gateway::make_remote_backend("ollama", "http://127.0.0.1:1");
  auto config = config_for("deepseek-v1-ollama");
  config.timeout_s = 5.0;
  const auto out = backend->send(sample_bundle(), config);
  EXPECT_FALSE(out.api_success);
  EXPECT_EQ(out.error_detail.rfind("transport error:", 0), 0u) << out.error_detail;
  EXPECT_GE(out.latency_ms, 1);
}

TEST(Gateway, RegistrationAndLookup) {
  gateway::Gateway gw(gateway::GatewayConfig{2, 0.0});
  EXPECT_FALSE(gw.has_model("gpt-5.2"));
  EXPECT_THROW(gw.model_config("gpt-5.2"), std::out_of_range);
  EXPECT_THROW(gw.send(sample_bundle(), "gpt-5.2"), std::out_of_range);

  auto backend = std::make_shared<RecordingBackend>();
  gw.register_model(config_for("gpt-5.2"), backend);
  EXPECT_TRUE(gw.has_model("gpt-5.2"));
  EXPECT_EQ(gw.model_config("gpt-5.2").provider, "openai");
  EXPECT_THROW(gw.register_model(config_for("gemini-3-pro"), nullptr), std::invalid_argument);

  const auto out = gw.send(sample_bundle(), "gpt-5.2");
  EXPECT_TRUE(out.api_success);
  EXPECT_EQ(backend->call_times().size(), 1u);
}

TEST(Gateway, PerModelPacing) {
  gateway::Gateway gw(gateway::GatewayConfig{4, 0.05});
  auto backend_a = std::make_shared<RecordingBackend>();
  auto backend_b = std::make_shared<RecordingBackend>();
  gw.register_model(config_for("gpt-5.2"), backend_a);
  gw.register_model(config_for("claude-4.5-sonnet"), backend_b);

  for (int i = 0; i < 3; ++i) gw.send(sample_bundle(), "gpt-5.2");
  const auto times = backend_a->call_times();
  ASSERT_EQ(times.size(), 3u);
  for (size_t i = 1; i < times.size(); ++i) {
    const auto gap = std::chrono::duration_cast<std::chrono::milliseconds>(times[i] - times[i - 1]);
    EXPECT_GE(gap.count(), 40) << "dispatch " << i;
  }

  // A different model has independent pacing state: its first dispatch does
  // not wait on the other label's schedule.
  const auto before = std::chrono::steady_clock::now();
  gw.send(sample_bundle(), "claude-4.5-sonnet");
  const auto first_b = backend_b->call_times().at(0);
  EXPECT_LT(std::chrono::duration_cast<std::chrono::milliseconds>(first_b - before).count(), 40);
}

TEST(Gateway, ConcurrencyBound) {
  gateway::Gateway gw(gateway::GatewayConfig{2, 0.0});
  auto backend = std::make_shared<RecordingBackend>();
  backend->set_hold_ms(25);
  gw.register_model(config_for("gpt-5.2"), backend);

  std::vector<std::thread> workers;
  for (int i = 0; i < 6; ++i) {
    workers.emplace_back([&gw] { gw.send(sample_bundle(), "gpt-5.2"); });
  }
  for (auto& w : workers) w.join();

  EXPECT_EQ(backend->call_times().size(), 6u);
  EXPECT_LE(backend->max_active(), 2);
  EXPECT_GE(backend->max_active(), 1);
}
