#include "slangscan/provider.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "slangscan/error.hpp"
#include "slangscan/http_provider.hpp"
#include "slangscan/mock_provider.hpp"

namespace slangscan {

Clock::time_point SystemClock::now() const { return std::chrono::steady_clock::now(); }

void SystemClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

Clock& system_clock() {
  static SystemClock clock;
  return clock;
}

Clock::time_point ManualClock::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

void ManualClock::sleep_until(time_point t) {
  std::lock_guard lock(mu_);
  now_ = std::max(now_, t);
}

void ManualClock::advance(duration d) {
  std::lock_guard lock(mu_);
  now_ += d;
}

RateLimiter::RateLimiter(unsigned per_minute, Clock& clock) : per_minute_(per_minute), clock_(clock) {
  if (per_minute_ == 0) throw ConfigError("requests_per_minute must be >= 1");
}

Clock::time_point RateLimiter::acquire() {
  constexpr auto kWindow = std::chrono::seconds(60);
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    slot = clock_.now();
    if (!recent_.empty()) slot = std::max(slot, recent_.back());
    if (recent_.size() >= per_minute_) {
      slot = std::max(slot, recent_[recent_.size() - per_minute_] + kWindow);
    }
    recent_.push_back(slot);
    while (recent_.size() > per_minute_) recent_.pop_front();
  }
  clock_.sleep_until(slot);
  return slot;
}

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::chrono::milliseconds RetryPolicy::backoff_for(unsigned failed_attempts) const {
  double ms = static_cast<double>(initial_backoff.count());
  for (unsigned i = 1; i < failed_attempts; ++i) ms *= multiplier;
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

void validate(const ProviderConfig& c) {
  if (c.max_concurrent < 1) throw ConfigError("max_concurrent must be >= 1");
  if (c.requests_per_minute < 1) throw ConfigError("requests_per_minute must be >= 1");
  if (c.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  if (c.kind == "openai-compatible") {
    if (c.endpoint.empty()) throw ConfigError("provider endpoint is required");
    if (c.model.empty()) throw ConfigError("provider model is required");
  } else if (c.kind != "mock") {
    throw ConfigError("unknown provider kind '" + c.kind + "'");
  }
}

void to_json(nlohmann::json& j, const ProviderConfig& c) {
  j = nlohmann::json{{"kind", c.kind},
                     {"endpoint", c.endpoint},
                     {"path", c.path},
                     {"model", c.model},
                     {"api_key_env", c.api_key_env},
                     {"max_concurrent", c.max_concurrent},
                     {"requests_per_minute", c.requests_per_minute},
                     {"retry",
                      {{"max_attempts", c.retry.max_attempts},
                       {"initial_backoff_ms", c.retry.initial_backoff.count()},
                       {"multiplier", c.retry.multiplier},
                       {"max_backoff_ms", c.retry.max_backoff.count()}}},
                     {"timeout_s", c.timeout.count()},
                     {"send_temperature", c.send_temperature},
                     {"mock", c.mock}};
}

void from_json(const nlohmann::json& j, ProviderConfig& c) {
  ProviderConfig d;
  c.kind = j.value("kind", d.kind);
  c.endpoint = j.value("endpoint", d.endpoint);
  c.path = j.value("path", d.path);
  c.model = j.value("model", d.model);
  c.api_key_env = j.value("api_key_env", d.api_key_env);
  c.max_concurrent = j.value("max_concurrent", d.max_concurrent);
  c.requests_per_minute = j.value("requests_per_minute", d.requests_per_minute);
  if (auto r = j.find("retry"); r != j.end()) {
    c.retry.max_attempts = r->value("max_attempts", d.retry.max_attempts);
    c.retry.initial_backoff =
        std::chrono::milliseconds(r->value("initial_backoff_ms", d.retry.initial_backoff.count()));
    c.retry.multiplier = r->value("multiplier", d.retry.multiplier);
    c.retry.max_backoff =
        std::chrono::milliseconds(r->value("max_backoff_ms", d.retry.max_backoff.count()));
  }
  c.timeout = std::chrono::seconds(j.value("timeout_s", d.timeout.count()));
  c.send_temperature = j.value("send_temperature", d.send_temperature);
  c.mock = j.value("mock", nlohmann::json::object());
}

std::unique_ptr<CompletionProvider> make_provider(const ProviderConfig& config) {
  validate(config);
  if (config.kind == "mock") {
    return std::make_unique<MockProvider>(mock_script_from_json(config.mock));
  }
  if (config.api_key_env.empty()) {
    throw ConfigError("provider '" + config.model + "' needs api_key_env");
  }
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("credentials variable " + config.api_key_env + " is not set");
  }
  return std::make_unique<HttpChatProvider>(config, key);
}

}  // namespace slangscan
