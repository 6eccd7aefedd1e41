#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace slangscan {

// ---------------------------------------------------------------------------
// Time

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  using duration = std::chrono::steady_clock::duration;

  virtual ~Clock() = default;
  virtual time_point now() const = 0;
  virtual void sleep_until(time_point t) = 0;
  void sleep_for(duration d) { sleep_until(now() + d); }
};

class SystemClock final : public Clock {
 public:
  time_point now() const override;
  void sleep_until(time_point t) override;
};

Clock& system_clock();

/// Virtual time for tests: sleeping advances the clock instantly.
class ManualClock final : public Clock {
 public:
  time_point now() const override;
  void sleep_until(time_point t) override;
  void advance(duration d);

 private:
  mutable std::mutex mu_;
  time_point now_{};
};

/// Sliding-window limiter: at most `per_minute` dispatch slots in any
/// 60-second window. acquire() reserves the earliest legal slot and blocks
/// (on the clock) until it arrives.
class RateLimiter {
 public:
  RateLimiter(unsigned per_minute, Clock& clock);
  Clock::time_point acquire();

 private:
  unsigned per_minute_;
  Clock& clock_;
  std::mutex mu_;
  std::deque<Clock::time_point> recent_;
};

// ---------------------------------------------------------------------------
// Chat completion interface

enum class Role { System, User, Assistant };
std::string_view to_string(Role r) noexcept;

struct ChatMessage {
  Role role;
  std::string content;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  std::optional<double> temperature;
  /// Slot granted by the rate limiter.
  Clock::time_point dispatched_at{};
};

enum class CompletionStatus {
  Ok,
  /// The provider declined on content-policy grounds. Not retried.
  ContentRefused,
  /// Network, HTTP or payload failure. Retried with backoff.
  TransportError,
};

struct CompletionResponse {
  CompletionStatus status = CompletionStatus::Ok;
  std::string content;
  std::string error;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

/// Anything that can answer a chat conversation. Implementations must be
/// safe to call from several threads at once.
class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
  /// Some endpoints reject a temperature parameter; it is then omitted.
  virtual bool accepts_temperature() const { return true; }
};

// ---------------------------------------------------------------------------
// Configuration

struct RetryPolicy {
  unsigned max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};

  std::chrono::milliseconds backoff_for(unsigned failed_attempts) const;
};

struct ProviderConfig {
  /// "mock" or "openai-compatible".
  std::string kind = "mock";
  /// Base URL, e.g. "https://api.openai.com".
  std::string endpoint;
  std::string path = "/v1/chat/completions";
  std::string model;
  /// Name of the environment variable that holds the API key. The key
  /// itself is never stored in, or written from, this struct.
  std::string api_key_env;
  unsigned max_concurrent = 1;
  unsigned requests_per_minute = 60;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
  bool send_temperature = true;
  /// Script for the mock provider (see MockScript).
  nlohmann::json mock = nlohmann::json::object();
};

/// Throws ConfigError when caps are below 1 or required fields are missing.
void validate(const ProviderConfig& config);

void to_json(nlohmann::json& j, const ProviderConfig& c);
void from_json(const nlohmann::json& j, ProviderConfig& c);

/// Builds the provider named by config.kind. Throws ConfigError when the
/// credentials environment variable is unset or empty.
std::unique_ptr<CompletionProvider> make_provider(const ProviderConfig& config);

}  // namespace slangscan
