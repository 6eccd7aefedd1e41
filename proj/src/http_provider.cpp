#include "slangscan/http_provider.hpp"

#include <httplib.h>

#include "slangscan/text.hpp"

namespace slangscan {

HttpChatProvider::HttpChatProvider(ProviderConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {}

std::string HttpChatProvider::id() const { return config_.model; }

nlohmann::json chat_request_body(const std::string& model, const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  nlohmann::json body{{"model", model}, {"messages", std::move(messages)}};
  if (request.temperature) body["temperature"] = *request.temperature;
  return body;
}

namespace {

bool names_content_policy(std::string_view s) {
  const std::string lowered = text::ascii_lower(s);
  return lowered.find("content_filter") != std::string::npos ||
         lowered.find("content_policy") != std::string::npos ||
         lowered.find("content management policy") != std::string::npos ||
         lowered.find("safety") != std::string::npos;
}

}  // namespace

CompletionResponse interpret_chat_response(int http_status, const std::string& body) {
  CompletionResponse r;
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (http_status != 200) {
    std::string code;
    std::string message = body.substr(0, 500);
    if (!j.is_discarded() && j.contains("error") && j["error"].is_object()) {
      const auto& e = j["error"];
      if (e.contains("code") && e["code"].is_string()) code = e["code"].get<std::string>();
      if (e.contains("message") && e["message"].is_string()) message = e["message"].get<std::string>();
    }
    const bool refused = http_status == 400 && (names_content_policy(code) || names_content_policy(message));
    r.status = refused ? CompletionStatus::ContentRefused : CompletionStatus::TransportError;
    r.error = "HTTP " + std::to_string(http_status) + ": " + message;
    return r;
  }
  if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    r.status = CompletionStatus::TransportError;
    r.error = "response has no choices";
    return r;
  }
  const auto& choice = j["choices"][0];
  const std::string finish = choice.value("finish_reason", std::string{});
  const auto& message = choice.contains("message") ? choice["message"] : nlohmann::json::object();
  if (finish == "content_filter" || (message.contains("refusal") && !message["refusal"].is_null())) {
    r.status = CompletionStatus::ContentRefused;
    r.error = "refused: finish_reason=" + finish;
    return r;
  }
  if (!message.contains("content") || !message["content"].is_string()) {
    r.status = CompletionStatus::TransportError;
    r.error = "response message has no text content";
    return r;
  }
  r.content = message["content"].get<std::string>();
  if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
    r.prompt_tokens = u->value("prompt_tokens", std::size_t{0});
    r.completion_tokens = u->value("completion_tokens", std::size_t{0});
  }
  return r;
}

CompletionResponse HttpChatProvider::complete(const CompletionRequest& request) {
  httplib::Client client(config_.endpoint);
  const auto timeout = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
  client.set_connection_timeout(static_cast<time_t>(timeout), 0);
  client.set_read_timeout(static_cast<time_t>(timeout), 0);
  client.set_write_timeout(static_cast<time_t>(timeout), 0);
  httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};

  CompletionRequest effective = request;
  if (!config_.send_temperature) effective.temperature.reset();
  const std::string body = chat_request_body(config_.model, effective).dump();
  auto res = client.Post(config_.path, headers, body, "application/json");
  if (!res) {
    CompletionResponse r;
    r.status = CompletionStatus::TransportError;
    r.error = "connection failed: " + httplib::to_string(res.error());
    return r;
  }
  return interpret_chat_response(res->status, res->body);
}

}  // namespace slangscan
