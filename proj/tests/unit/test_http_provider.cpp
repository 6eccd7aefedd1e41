#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "../support/fixtures.hpp"
#include "slangscan/adjudicator.hpp"
#include "slangscan/http_provider.hpp"
#include "slangscan/mock_provider.hpp"

using namespace slangscan;

namespace {

std::string chat_reply(const std::string& content, const std::string& finish = "stop") {
  return nlohmann::json{{"choices", {{{"index", 0},
                                      {"finish_reason", finish},
                                      {"message", {{"role", "assistant"}, {"content", content}}}}}},
                        {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}}
      .dump();
}

// Local stand-in for a chat-completions endpoint. By default it forwards
// each conversation to a scripted mock; `mode` forces canned failures.
class FakeEndpoint {
 public:
  FakeEndpoint() : mock_(fixtures::cue_script()) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      const int mode = mode_.load();
      if (mode == 1) return res.set_content(chat_reply("", "content_filter"), "application/json");
      if (mode == 2) {
        res.status = 400;
        return res.set_content(R"({"error":{"code":"content_policy_violation","message":"blocked"}})",
                               "application/json");
      }
      if (mode == 3) {
        res.status = 503;
        return res.set_content("overloaded", "text/plain");
      }
      auto body = nlohmann::json::parse(req.body);
      CompletionRequest cr;
      for (const auto& m : body["messages"]) {
        const std::string role = m["role"];
        cr.messages.push_back({role == "system" ? Role::System : role == "user" ? Role::User : Role::Assistant,
                               m["content"].get<std::string>()});
      }
      auto out = mock_.complete(cr);
      if (out.status == CompletionStatus::ContentRefused) {
        return res.set_content(chat_reply("", "content_filter"), "application/json");
      }
      res.set_content(chat_reply(out.content), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  ProviderConfig config() const {
    ProviderConfig c;
    c.kind = "openai-compatible";
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_);
    c.model = "fake-model";
    c.api_key_env = "UNUSED";
    c.timeout = std::chrono::seconds(5);
    c.retry.initial_backoff = std::chrono::milliseconds(1);
    c.requests_per_minute = 100000;
    return c;
  }

  std::atomic<int> mode_{0};
  std::atomic<int> hits_{0};
  std::string last_auth_;
  std::string last_body_;

 private:
  MockProvider mock_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

CompletionRequest hello() {
  return CompletionRequest{{{Role::System, "ctx"}, {Role::User, "<tweet> hi </tweet>"}}, 0.0, {}};
}

}  // namespace

TEST(HttpProvider, SendsBearerTokenAndParsesReply) {
  FakeEndpoint ep;
  HttpChatProvider p(ep.config(), "sk-abc");
  auto r = p.complete(hello());
  EXPECT_EQ(r.status, CompletionStatus::Ok);
  EXPECT_FALSE(r.content.empty());
  EXPECT_EQ(r.prompt_tokens, 12u);
  EXPECT_EQ(ep.last_auth_, "Bearer sk-abc");
  auto body = nlohmann::json::parse(ep.last_body_);
  EXPECT_EQ(body["model"], "fake-model");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["messages"][0]["role"], "system");
}

TEST(HttpProvider, OmitsTemperatureWhenConfigured) {
  FakeEndpoint ep;
  auto cfg = ep.config();
  cfg.send_temperature = false;
  HttpChatProvider p(cfg, "k");
  EXPECT_FALSE(p.accepts_temperature());
  p.complete(hello());
  EXPECT_FALSE(nlohmann::json::parse(ep.last_body_).contains("temperature"));
}

TEST(HttpProvider, RecognizesRefusals) {
  FakeEndpoint ep;
  HttpChatProvider p(ep.config(), "k");
  ep.mode_ = 1;
  EXPECT_EQ(p.complete(hello()).status, CompletionStatus::ContentRefused);
  ep.mode_ = 2;
  EXPECT_EQ(p.complete(hello()).status, CompletionStatus::ContentRefused);
  ep.mode_ = 3;
  EXPECT_EQ(p.complete(hello()).status, CompletionStatus::TransportError);
}

TEST(HttpProvider, ConnectionFailureIsTransportError) {
  ProviderConfig c;
  c.endpoint = "http://127.0.0.1:1";
  c.model = "m";
  c.timeout = std::chrono::seconds(1);
  HttpChatProvider p(c, "k");
  auto r = p.complete(hello());
  EXPECT_EQ(r.status, CompletionStatus::TransportError);
  EXPECT_FALSE(r.error.empty());
}

TEST(HttpProvider, InterpretResponseEdgeCases) {
  EXPECT_EQ(interpret_chat_response(200, "not json").status, CompletionStatus::TransportError);
  EXPECT_EQ(interpret_chat_response(200, R"({"choices":[]})").status, CompletionStatus::TransportError);
  EXPECT_EQ(interpret_chat_response(200, R"({"choices":[{"message":{"content":null,"refusal":"no"}}]})").status,
            CompletionStatus::ContentRefused);
  EXPECT_EQ(interpret_chat_response(429, R"({"error":{"message":"rate limited"}})").status,
            CompletionStatus::TransportError);
  EXPECT_EQ(interpret_chat_response(200, chat_reply("yes")).content, "yes");
}

TEST(HttpProvider, AdjudicatesThroughTheWire) {
  FakeEndpoint ep;
  HttpChatProvider p(ep.config(), "k");
  auto fx = fixtures::spritzer_fenty(0, true, 1);
  auto cfg = ep.config();
  cfg.max_concurrent = 4;
  auto r = adjudicate(fx.corpus, p, cfg, default_scheme(), {.batch_size = 10});
  ASSERT_EQ(r.predictions.size(), fx.expected.size());
  for (const auto& [id, want] : fx.expected) EXPECT_EQ(r.predictions.find(id)->label, want) << id;
}
