#pragma once

#include <string>

#include "slangscan/provider.hpp"

namespace slangscan {

/// Chat-completions client for OpenAI-compatible endpoints.
///
/// Refusals are recognized from a "content_filter" finish reason, a
/// non-null "refusal" field, or an HTTP 400 whose error code names a content
/// policy. Everything else that is not a 200 with a message is a transport
/// error.
class HttpChatProvider final : public CompletionProvider {
 public:
  HttpChatProvider(ProviderConfig config, std::string api_key);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override;
  bool accepts_temperature() const override { return config_.send_temperature; }

 private:
  ProviderConfig config_;
  std::string api_key_;
};

/// Request body for a chat-completions call.
nlohmann::json chat_request_body(const std::string& model, const CompletionRequest& request);

/// Maps an HTTP status and body to a CompletionResponse.
CompletionResponse interpret_chat_response(int http_status, const std::string& body);

}  // namespace slangscan
