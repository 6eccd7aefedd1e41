#include "slangscan/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <queue>
#include <thread>

#include "slangscan/error.hpp"
#include "slangscan/kernels.hpp"
#include "slangscan/text.hpp"

namespace slangscan {

void to_json(nlohmann::json& j, const MatchPolicy& p) {
  j = nlohmann::json{{"case_insensitive", p.case_insensitive},
                     {"word_boundary", p.word_boundary},
                     {"allow_multiword", p.allow_multiword}};
}

void from_json(const nlohmann::json& j, MatchPolicy& p) {
  p.case_insensitive = j.value("case_insensitive", p.case_insensitive);
  p.word_boundary = j.value("word_boundary", p.word_boundary);
  p.allow_multiword = j.value("allow_multiword", p.allow_multiword);
}

std::string normalize_term(std::string_view term, const MatchPolicy& policy) {
  std::string out = text::normalize(term);
  if (out.empty()) throw LexiconError("lexicon term is empty after normalization");
  if (!policy.allow_multiword && out.find(' ') != std::string::npos) {
    throw LexiconError("multiword term '" + out + "' not allowed by policy");
  }
  if (policy.case_insensitive) out = text::ascii_lower(out);
  return out;
}

Lexicon::Lexicon(std::string name, std::vector<std::string> terms, MatchPolicy policy,
                 std::string citation)
    : name_(std::move(name)), policy_(policy), citation_(std::move(citation)) {
  terms_.reserve(terms.size());
  for (const auto& t : terms) terms_.push_back(normalize_term(t, policy_));
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
  if (terms_.empty()) throw LexiconError("lexicon '" + name_ + "' has no terms");
}

Lexicon Lexicon::with_term(std::string term) const {
  std::vector<std::string> terms = terms_;
  terms.push_back(std::move(term));
  return Lexicon(name_, std::move(terms), policy_, citation_);
}

Lexicon load_lexicon(std::istream& in, std::string_view fallback_name) {
  std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw LexiconError("cannot read lexicon stream");

  const auto first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
      throw LexiconError(std::string("malformed lexicon JSON: ") + e.what());
    }
    auto terms_it = j.find("terms");
    if (terms_it == j.end() || !terms_it->is_array()) {
      throw LexiconError("lexicon JSON needs a \"terms\" array");
    }
    std::vector<std::string> terms;
    for (const auto& t : *terms_it) {
      if (!t.is_string()) throw LexiconError("lexicon terms must be strings");
      terms.push_back(t.get<std::string>());
    }
    MatchPolicy policy;
    try {
      if (auto p = j.find("policy"); p != j.end()) policy = p->get<MatchPolicy>();
    } catch (const nlohmann::json::exception& e) {
      throw LexiconError(std::string("malformed lexicon policy: ") + e.what());
    }
    std::string name = j.value("name", std::string(fallback_name));
    return Lexicon(std::move(name), std::move(terms), policy, j.value("citation", std::string{}));
  }

  std::vector<std::string> terms;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line(content.data() + pos, eol - pos);
    pos = eol + 1;
    auto start = line.find_first_not_of(" \t\r");
    if (start == std::string_view::npos || line[start] == '#') continue;
    terms.emplace_back(line);
  }
  return Lexicon(std::string(fallback_name), std::move(terms));
}

Lexicon load_lexicon_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LexiconError("cannot open lexicon file " + path.string());
  return load_lexicon(in, path.stem().string());
}

void save_lexicon(std::ostream& out, const Lexicon& lexicon) {
  nlohmann::ordered_json j;
  j["name"] = lexicon.name();
  j["citation"] = lexicon.citation();
  const MatchPolicy& policy = lexicon.policy();
  j["policy"] = {{"case_insensitive", policy.case_insensitive},
                 {"word_boundary", policy.word_boundary},
                 {"allow_multiword", policy.allow_multiword}};
  j["terms"] = lexicon.terms();
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Aho-Corasick

Matcher::Matcher(const Lexicon& lexicon) : Matcher(lexicon.terms(), lexicon.policy()) {}

Matcher::Matcher(std::vector<std::string> terms, MatchPolicy policy)
    : terms_(std::move(terms)), policy_(policy) {
  // Byte classes: 0 is "never appears in a term", the rest are dense ids.
  for (const auto& t : terms_) {
    for (unsigned char b : t) {
      if (byte_class_[b] == 0) byte_class_[b] = static_cast<std::uint8_t>(class_count_++);
    }
  }
  const std::size_t classes = class_count_;

  auto add_state = [&] {
    next_.insert(next_.end(), classes, -1);
    terminal_.push_back(-1);
    dict_link_.push_back(-1);
    return static_cast<std::int32_t>(terminal_.size() - 1);
  };
  add_state();

  for (std::size_t id = 0; id < terms_.size(); ++id) {
    std::int32_t s = 0;
    for (unsigned char b : terms_[id]) {
      auto& slot = next_[static_cast<std::size_t>(s) * classes + byte_class_[b]];
      if (slot == -1) {
        std::int32_t fresh = add_state();
        // add_state may have reallocated next_.
        next_[static_cast<std::size_t>(s) * classes + byte_class_[b]] = fresh;
        s = fresh;
      } else {
        s = slot;
      }
    }
    terminal_[static_cast<std::size_t>(s)] = static_cast<std::int32_t>(id);
  }

  // Breadth-first pass turns the trie into a complete DFA.
  std::vector<std::int32_t> fail(terminal_.size(), 0);
  std::queue<std::int32_t> pending;
  for (std::size_t c = 0; c < classes; ++c) {
    auto& slot = next_[c];
    if (slot == -1) {
      slot = 0;
    } else {
      fail[static_cast<std::size_t>(slot)] = 0;
      pending.push(slot);
    }
  }
  while (!pending.empty()) {
    const auto s = static_cast<std::size_t>(pending.front());
    pending.pop();
    const auto f = static_cast<std::size_t>(fail[s]);
    dict_link_[s] = terminal_[f] != -1 ? static_cast<std::int32_t>(f) : dict_link_[f];
    for (std::size_t c = 0; c < classes; ++c) {
      auto& slot = next_[s * classes + c];
      if (slot == -1) {
        slot = next_[f * classes + c];
      } else {
        fail[static_cast<std::size_t>(slot)] = next_[f * classes + c];
        pending.push(slot);
      }
    }
  }
}

template <typename OnMatch>
void Matcher::scan(std::string_view text, OnMatch&& on_match) const {
  if (terms_.empty()) return;
  std::string_view haystack = text;
  thread_local std::string folded;
  if (policy_.case_insensitive) {
    folded.resize(text.size());
    kernels::ascii_fold_lower(text, folded);
    haystack = folded;
  }

  const std::size_t classes = class_count_;
  std::size_t state = 0;
  for (std::size_t i = 0; i < haystack.size(); ++i) {
    state = static_cast<std::size_t>(
        next_[state * classes + byte_class_[static_cast<unsigned char>(haystack[i])]]);
    std::int32_t hit = terminal_[state] != -1 ? static_cast<std::int32_t>(state) : dict_link_[state];
    for (; hit != -1; hit = dict_link_[static_cast<std::size_t>(hit)]) {
      const auto term = static_cast<std::uint32_t>(terminal_[static_cast<std::size_t>(hit)]);
      const std::size_t end = i + 1;
      const std::size_t begin = end - terms_[term].size();
      if (policy_.word_boundary &&
          (text::word_char_before(text, begin) || text::word_char_at(text, end))) {
        continue;
      }
      if (on_match(MatchSpan{begin, end, term})) return;
    }
  }
}

std::vector<MatchSpan> Matcher::find_all(std::string_view text) const {
  std::vector<MatchSpan> spans;
  scan(text, [&](const MatchSpan& m) {
    spans.push_back(m);
    return false;
  });
  return spans;
}

std::vector<std::uint32_t> Matcher::matched_terms(std::string_view text) const {
  std::vector<std::uint32_t> ids;
  scan(text, [&](const MatchSpan& m) {
    ids.push_back(m.term);
    return false;
  });
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

bool Matcher::matches(std::string_view text) const {
  bool found = false;
  scan(text, [&](const MatchSpan&) { return found = true; });
  return found;
}

// ---------------------------------------------------------------------------

LexiconClassifier::LexiconClassifier(Lexicon lexicon)
    : lexicon_(std::move(lexicon)), matcher_(lexicon_) {}

MatchResult LexiconClassifier::match(const Post& post) const {
  MatchResult result{post.id, {}};
  const std::string normalized = text::normalize(post.text);
  for (auto id : matcher_.matched_terms(normalized)) {
    result.matched_terms.push_back(matcher_.terms()[id]);
  }
  // Term ids follow the lexicon's sorted order, so names are sorted too.
  return result;
}

PredictionSet LexiconClassifier::classify(const Corpus& corpus, unsigned threads) const {
  const std::size_t n = corpus.size();
  std::vector<char> positive(n, 0);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, n / 256)));

  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      positive[i] = matcher_.matches(text::normalize(corpus[i].text)) ? 1 : 0;
    }
  };
  if (threads <= 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t lo = 0; lo < n; lo += chunk) pool.emplace_back(work, lo, std::min(n, lo + chunk));
  }

  PredictionSet out("lexicon:" + lexicon_.name());
  for (std::size_t i = 0; i < n; ++i) {
    out.set(Prediction{corpus[i].id, positive[i] ? Label::OpioidRelated : Label::NotOpioidRelated,
                       std::nullopt, std::nullopt});
  }
  return out;
}

MatchResult match(const Post& post, const Lexicon& lexicon) {
  return LexiconClassifier(lexicon).match(post);
}

PredictionSet classify_corpus(const Corpus& corpus, const Lexicon& lexicon, unsigned threads) {
  return LexiconClassifier(lexicon).classify(corpus, threads);
}

}  // namespace slangscan
