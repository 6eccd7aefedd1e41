#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "slangscan/corpus.hpp"
#include "slangscan/label.hpp"

namespace slangscan {

/// Two-turn prompt: the model first reasons freely about a delimited batch
/// of posts, then answers with one constrained word per post.
struct PromptScheme {
  /// System-role instruction sent before every conversation.
  std::string context;
  /// First user turn; must contain the `{tweets}` slot exactly once.
  std::string turn1_template;
  /// Second user turn asking for the comma-separated answers.
  std::string turn2;
  double temperature = 0.0;
  /// Words meaning OpioidRelated, NotOpioidRelated, Unsure, in that order.
  std::vector<std::string> answer_vocabulary{"yes", "no", "unsure"};

  friend bool operator==(const PromptScheme&, const PromptScheme&) = default;
};

inline constexpr std::string_view kTweetsSlot = "{tweets}";
inline constexpr std::string_view kOpenTag = "<tweet>";
inline constexpr std::string_view kCloseTag = "</tweet>";

/// The fixed scheme used for every provider unless overridden.
PromptScheme default_scheme();

/// Throws ConfigError when the template slots, temperature or vocabulary
/// are unusable.
void validate(const PromptScheme& scheme);

void to_json(nlohmann::json& j, const PromptScheme& s);
/// Keys that are absent fall back to the default scheme.
void from_json(const nlohmann::json& j, PromptScheme& s);

/// Neutralizes tag-shaped text ("<tweet>", "</tweet>", any case) by swapping
/// its angle brackets for full-width ones. Other text is unchanged.
std::string escape_delimiters(std::string_view text);

/// First user turn for a batch. Each post becomes "<tweet> TEXT </tweet>";
/// blocks are separated by a blank line. Throws ContractError on an empty
/// batch.
std::string render_turn1(std::span<const Post> posts, const PromptScheme& scheme);
std::string render_turn1_texts(std::span<const std::string> texts, const PromptScheme& scheme);

/// Post bodies in the order they appear in a rendered first turn.
std::vector<std::string> extract_tweets(std::string_view rendered_turn1);

/// Splits the constrained answer on commas and maps each cleaned token
/// through the vocabulary. Throws AnswerParseError when the count differs
/// from `n` or a token is not in the vocabulary.
std::vector<Label> parse_answers(std::string_view reply, std::size_t n,
                                 std::span<const std::string> vocabulary);

/// Inverse of parse_answers for semantic labels: "yes, no, unsure".
std::string render_answers(std::span<const Label> labels, std::span<const std::string> vocabulary);

}  // namespace slangscan
