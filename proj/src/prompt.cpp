#include "slangscan/prompt.hpp"

#include <algorithm>
#include <array>

#include "slangscan/error.hpp"
#include "slangscan/text.hpp"

namespace slangscan {

PromptScheme default_scheme() {
  PromptScheme s;
  s.context =
      "You are an AI assistant that helps people find information. You are particularly hip "
      "with online slang and know everything about how people talk on social media platforms "
      "like Facebook, Twitter, Reddit, and TikTok.";
  s.turn1_template =
      "I am going to give you a series of tweets, delimited with the xml tags <tweet></tweet>. "
      "For each tweet, I want you to tell me if the tweet is directly referring to opioid use. "
      "Reason through your answers step-by-step.\n\n{tweets}";
  s.turn2 =
      "Based on your reasoning above, answer the question in one word by saying "
      "“yes”, “no”, or “unsure” once for each tweet, where "
      "“yes” means that the tweet refers to opioids. Separate your answers by commas. "
      "Only give this in your response; do not add other content.";
  s.temperature = 0.0;
  s.answer_vocabulary = {"yes", "no", "unsure"};
  return s;
}

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

void validate(const PromptScheme& scheme) {
  if (count_occurrences(scheme.turn1_template, kTweetsSlot) != 1) {
    throw ConfigError("turn1_template must contain the {tweets} slot exactly once");
  }
  if (scheme.turn2.empty()) throw ConfigError("turn2 must not be empty");
  if (!(scheme.temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  const auto& vocab = scheme.answer_vocabulary;
  if (vocab.size() != 3) throw ConfigError("answer_vocabulary needs exactly three words");
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i].empty() || vocab[i].find(',') != std::string::npos) {
      throw ConfigError("answer_vocabulary words must be nonempty and comma-free");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (text::ascii_lower(vocab[i]) == text::ascii_lower(vocab[k])) {
        throw ConfigError("answer_vocabulary words must be distinct");
      }
    }
  }
}

void to_json(nlohmann::json& j, const PromptScheme& s) {
  j = nlohmann::json{{"context", s.context},
                     {"turn1_template", s.turn1_template},
                     {"turn2", s.turn2},
                     {"temperature", s.temperature},
                     {"answer_vocabulary", s.answer_vocabulary}};
}

void from_json(const nlohmann::json& j, PromptScheme& s) {
  const PromptScheme d = default_scheme();
  s.context = j.value("context", d.context);
  s.turn1_template = j.value("turn1_template", d.turn1_template);
  s.turn2 = j.value("turn2", d.turn2);
  s.temperature = j.value("temperature", d.temperature);
  s.answer_vocabulary = j.value("answer_vocabulary", d.answer_vocabulary);
}

std::string escape_delimiters(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] == '<') {
      std::size_t j = i + 1;
      if (j < in.size() && in[j] == '/') ++j;
      if (in.size() - j >= 5 && text::ascii_lower(in.substr(j, 5)) == "tweet") {
        std::size_t k = j + 5;
        while (k < in.size() && (in[k] == ' ' || in[k] == '\t')) ++k;
        if (k < in.size() && in[k] == '>') {
          out += "＜";
          out.append(in.substr(i + 1, k - i - 1));
          out += "＞";
          i = k + 1;
          continue;
        }
      }
    }
    out.push_back(in[i++]);
  }
  return out;
}

std::string render_turn1_texts(std::span<const std::string> texts, const PromptScheme& scheme) {
  if (texts.empty()) throw ContractError("cannot render an empty batch");
  std::string blocks;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i > 0) blocks += "\n\n";
    blocks += kOpenTag;
    blocks += ' ';
    blocks += escape_delimiters(texts[i]);
    blocks += ' ';
    blocks += kCloseTag;
  }
  std::string out = scheme.turn1_template;
  const auto slot = out.find(kTweetsSlot);
  if (slot == std::string::npos) throw ConfigError("turn1_template has no {tweets} slot");
  out.replace(slot, kTweetsSlot.size(), blocks);
  return out;
}

std::string render_turn1(std::span<const Post> posts, const PromptScheme& scheme) {
  std::vector<std::string> texts;
  texts.reserve(posts.size());
  for (const auto& p : posts) texts.push_back(p.text);
  return render_turn1_texts(texts, scheme);
}

std::vector<std::string> extract_tweets(std::string_view rendered) {
  std::vector<std::string> out;
  // The instruction text itself mentions "<tweet></tweet>"; an empty pair is
  // not a post.
  std::size_t pos = 0;
  for (;;) {
    auto open = rendered.find(kOpenTag, pos);
    if (open == std::string_view::npos) break;
    auto body = open + kOpenTag.size();
    auto close = rendered.find(kCloseTag, body);
    if (close == std::string_view::npos) break;
    pos = close + kCloseTag.size();
    if (close == body) continue;
    std::string_view inner = rendered.substr(body, close - body);
    if (inner.starts_with(' ')) inner.remove_prefix(1);
    if (inner.ends_with(' ')) inner.remove_suffix(1);
    out.emplace_back(inner);
  }
  return out;
}

namespace {

constexpr std::array<std::string_view, 4> kCurlyQuotes = {"“", "”", "‘", "’"};

bool strip_one(std::string_view& s, bool front) {
  if (s.empty()) return false;
  const char c = front ? s.front() : s.back();
  if (std::string_view(" \t\r\n.,!?;:\"'`()[]{}*_<>").find(c) != std::string_view::npos) {
    front ? s.remove_prefix(1) : s.remove_suffix(1);
    return true;
  }
  for (auto q : kCurlyQuotes) {
    if (front ? s.starts_with(q) : s.ends_with(q)) {
      front ? s.remove_prefix(q.size()) : s.remove_suffix(q.size());
      return true;
    }
  }
  return false;
}

std::string clean_token(std::string_view token) {
  while (strip_one(token, true)) {
  }
  while (strip_one(token, false)) {
  }
  return text::ascii_lower(token);
}

}  // namespace

std::vector<Label> parse_answers(std::string_view reply, std::size_t n,
                                 std::span<const std::string> vocabulary) {
  if (n == 0) throw ContractError("parse_answers needs n >= 1");
  if (vocabulary.size() != 3) throw ContractError("answer vocabulary needs three words");

  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  for (;;) {
    auto comma = reply.find(',', start);
    tokens.push_back(reply.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (tokens.size() != n) {
    throw AnswerParseError(AnswerParseError::Kind::CountMismatch,
                           "expected " + std::to_string(n) + " answers, got " +
                               std::to_string(tokens.size()));
  }

  constexpr std::array<Label, 3> kMeaning = {Label::OpioidRelated, Label::NotOpioidRelated,
                                             Label::Unsure};
  std::vector<Label> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string word = clean_token(tokens[i]);
    std::size_t v = 0;
    for (; v < vocabulary.size(); ++v) {
      if (word == text::ascii_lower(vocabulary[v])) break;
    }
    if (v == vocabulary.size()) {
      throw AnswerParseError(AnswerParseError::Kind::OutOfVocabulary,
                             "answer " + std::to_string(i) + " ('" + std::string(tokens[i]) +
                                 "') is not in the vocabulary",
                             i);
    }
    labels.push_back(kMeaning[v]);
  }
  return labels;
}

std::string render_answers(std::span<const Label> labels, std::span<const std::string> vocabulary) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_semantic(labels[i])) throw ContractError("cannot render an error label as an answer");
    if (i > 0) out += ", ";
    out += vocabulary[index_of(labels[i])];
  }
  return out;
}

}  // namespace slangscan
