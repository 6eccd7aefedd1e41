#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "slangscan/label.hpp"
#include "slangscan/provider.hpp"

namespace slangscan {

struct KeywordRule {
  std::string keyword;  // case-insensitive substring of the post text
  Label answer = Label::OpioidRelated;
};

/// Deterministic behaviour of MockProvider.
struct MockScript {
  /// First matching rule wins; posts matching none get `fallback`.
  std::vector<KeywordRule> rules;
  Label fallback = Label::NotOpioidRelated;
  /// A first turn containing a post with any of these substrings is refused
  /// on content-policy grounds.
  std::vector<std::string> refuse_if_contains;
  /// Exact last-user-message -> reply, checked before the rules.
  std::map<std::string, std::string> canned;
  /// The next N second-turn replies are malformed.
  std::size_t malformed_answers = 0;
  /// The next N requests fail at the transport level.
  std::size_t transport_errors = 0;
  std::vector<std::string> vocabulary{"yes", "no", "unsure"};
};

/// JSON form: {"rules": [{"contains": "fentanyl", "answer": "yes"}],
/// "fallback": "no", "refuse_if_contains": [...], "canned": {...},
/// "malformed_answers": 0, "transport_errors": 0}. Answers may be vocabulary
/// words or label names.
MockScript mock_script_from_json(const nlohmann::json& j);

/// Offline stand-in for a chat model. It reads the posts back out of the
/// first turn, labels them with the keyword rules, and answers the second
/// turn in the constrained format. Every request is logged.
class MockProvider final : public CompletionProvider {
 public:
  struct RequestRecord {
    Clock::time_point dispatched_at;
    int turn = 0;  // 1 or 2
    std::size_t posts = 0;
    CompletionStatus status = CompletionStatus::Ok;
    std::optional<double> temperature;
  };

  explicit MockProvider(MockScript script, std::string id = "mock");

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return id_; }
  bool accepts_temperature() const override { return accepts_temperature_; }
  void set_accepts_temperature(bool v) { accepts_temperature_ = v; }

  void inject_malformed_answers(std::size_t count);
  void inject_transport_errors(std::size_t count);

  /// Labels the script assigns to one post text.
  Label label_for(std::string_view post_text) const;

  std::vector<RequestRecord> log() const;
  std::size_t request_count() const;

 private:
  mutable std::mutex mu_;
  MockScript script_;
  std::string id_;
  bool accepts_temperature_ = true;
  std::vector<RequestRecord> log_;
};

}  // namespace slangscan
