#include "slangscan/mock_provider.hpp"

#include <algorithm>

#include "slangscan/error.hpp"
#include "slangscan/prompt.hpp"
#include "slangscan/text.hpp"

namespace slangscan {

namespace {

Label parse_answer_word(const std::string& word, const std::vector<std::string>& vocabulary) {
  const std::string w = text::ascii_lower(word);
  for (std::size_t i = 0; i < vocabulary.size() && i < kSemanticLabels.size(); ++i) {
    if (w == text::ascii_lower(vocabulary[i])) return kSemanticLabels[i];
  }
  if (auto l = parse_label(w); l && is_semantic(*l)) return *l;
  throw ConfigError("mock script: unknown answer '" + word + "'");
}

std::size_t count_words(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace

MockScript mock_script_from_json(const nlohmann::json& j) {
  MockScript s;
  s.vocabulary = j.value("vocabulary", s.vocabulary);
  if (auto rules = j.find("rules"); rules != j.end()) {
    for (const auto& r : *rules) {
      s.rules.push_back(KeywordRule{r.at("contains").get<std::string>(),
                                    parse_answer_word(r.at("answer").get<std::string>(), s.vocabulary)});
    }
  }
  if (auto f = j.find("fallback"); f != j.end()) s.fallback = parse_answer_word(f->get<std::string>(), s.vocabulary);
  s.refuse_if_contains = j.value("refuse_if_contains", s.refuse_if_contains);
  s.canned = j.value("canned", s.canned);
  s.malformed_answers = j.value("malformed_answers", s.malformed_answers);
  s.transport_errors = j.value("transport_errors", s.transport_errors);
  return s;
}

MockProvider::MockProvider(MockScript script, std::string id)
    : script_(std::move(script)), id_(std::move(id)) {
  for (auto& r : script_.rules) r.keyword = text::ascii_lower(r.keyword);
  for (auto& k : script_.refuse_if_contains) k = text::ascii_lower(k);
}

void MockProvider::inject_malformed_answers(std::size_t count) {
  std::lock_guard lock(mu_);
  script_.malformed_answers += count;
}

void MockProvider::inject_transport_errors(std::size_t count) {
  std::lock_guard lock(mu_);
  script_.transport_errors += count;
}

Label MockProvider::label_for(std::string_view post_text) const {
  const std::string lowered = text::ascii_lower(post_text);
  for (const auto& r : script_.rules) {
    if (lowered.find(r.keyword) != std::string::npos) return r.answer;
  }
  return script_.fallback;
}

std::vector<MockProvider::RequestRecord> MockProvider::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t MockProvider::request_count() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

CompletionResponse MockProvider::complete(const CompletionRequest& request) {
  std::lock_guard lock(mu_);

  const ChatMessage* first_user = nullptr;
  std::size_t user_turns = 0;
  for (const auto& m : request.messages) {
    if (m.role != Role::User) continue;
    if (first_user == nullptr) first_user = &m;
    ++user_turns;
  }
  const int turn = user_turns >= 2 ? 2 : 1;
  const std::vector<std::string> tweets =
      first_user ? extract_tweets(first_user->content) : std::vector<std::string>{};

  RequestRecord record{request.dispatched_at, turn, tweets.size(), CompletionStatus::Ok,
                       request.temperature};
  CompletionResponse resp;
  std::size_t prompt_words = 0;
  for (const auto& m : request.messages) prompt_words += count_words(m.content);
  resp.prompt_tokens = prompt_words;

  auto finish = [&](CompletionResponse r) {
    record.status = r.status;
    r.completion_tokens = count_words(r.content);
    log_.push_back(record);
    return r;
  };

  if (script_.transport_errors > 0) {
    --script_.transport_errors;
    resp.status = CompletionStatus::TransportError;
    resp.error = "mock: injected transport failure";
    return finish(resp);
  }

  if (!request.messages.empty()) {
    if (auto it = script_.canned.find(request.messages.back().content); it != script_.canned.end()) {
      resp.content = it->second;
      return finish(resp);
    }
  }

  if (turn == 1) {
    std::string reasoning;
    for (std::size_t i = 0; i < tweets.size(); ++i) {
      const std::string lowered = text::ascii_lower(tweets[i]);
      for (const auto& k : script_.refuse_if_contains) {
        if (lowered.find(k) != std::string::npos) {
          resp.status = CompletionStatus::ContentRefused;
          resp.error = "mock: content policy refusal";
          return finish(resp);
        }
      }
      const Label l = label_for(tweets[i]);
      reasoning += "Tweet " + std::to_string(i + 1) + ": " + std::string(to_string(l)) + ".\n";
    }
    resp.content = reasoning;
    return finish(resp);
  }

  if (script_.malformed_answers > 0) {
    --script_.malformed_answers;
    resp.content = "I think the first one is about opioids.";
    return finish(resp);
  }
  std::vector<Label> labels;
  labels.reserve(tweets.size());
  for (const auto& t : tweets) labels.push_back(label_for(t));
  resp.content = render_answers(labels, script_.vocabulary);
  return finish(resp);
}

}  // namespace slangscan
