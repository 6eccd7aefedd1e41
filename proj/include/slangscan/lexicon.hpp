#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slangscan/corpus.hpp"
#include "slangscan/match_policy.hpp"
#include "slangscan/prediction.hpp"

namespace slangscan {

/// Canonical stored form of a term: normalized text, ASCII-lowercased under
/// a case-insensitive policy. Throws LexiconError for an empty term, or a
/// multiword term when the policy forbids them.
std::string normalize_term(std::string_view term, const MatchPolicy& policy);

/// Named term list with a single match policy.
class Lexicon {
 public:
  /// Terms are normalized, deduplicated and sorted. Throws LexiconError if
  /// nothing is left.
  Lexicon(std::string name, std::vector<std::string> terms, MatchPolicy policy = {},
          std::string citation = {});

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const MatchPolicy& policy() const noexcept { return policy_; }
  const std::string& citation() const noexcept { return citation_; }

  Lexicon with_term(std::string term) const;

 private:
  std::string name_;
  std::vector<std::string> terms_;
  MatchPolicy policy_;
  std::string citation_;
};

/// JSON lexicon document, or one term per line when the stream does not
/// start with '{'. Plain-text lexicons take `fallback_name` and the default
/// policy; blank lines and lines starting with '#' are ignored.
Lexicon load_lexicon(std::istream& in, std::string_view fallback_name);
Lexicon load_lexicon_file(const std::filesystem::path& path);
void save_lexicon(std::ostream& out, const Lexicon& lexicon);

struct MatchSpan {
  std::size_t begin = 0;  // byte offsets into the searched text
  std::size_t end = 0;
  std::uint32_t term = 0;  // index into the matcher's term list

  friend bool operator==(const MatchSpan&, const MatchSpan&) = default;
};

/// Aho-Corasick automaton over a fixed term list. Every occurrence of every
/// term is found in one pass; overlapping occurrences are all reported.
class Matcher {
 public:
  /// `terms` must already be in stored form (see normalize_term).
  Matcher(std::vector<std::string> terms, MatchPolicy policy);
  explicit Matcher(const Lexicon& lexicon);

  /// All policy-valid occurrences in `text`, ordered by end offset, then by
  /// decreasing length.
  std::vector<MatchSpan> find_all(std::string_view text) const;

  /// Sorted, deduplicated indices of terms that occur at least once.
  std::vector<std::uint32_t> matched_terms(std::string_view text) const;

  bool matches(std::string_view text) const;

  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const MatchPolicy& policy() const noexcept { return policy_; }
  std::size_t state_count() const noexcept { return terminal_.size(); }

 private:
  template <typename OnMatch>
  void scan(std::string_view text, OnMatch&& on_match) const;

  std::vector<std::string> terms_;
  MatchPolicy policy_;
  std::array<std::uint8_t, 256> byte_class_{};
  std::size_t class_count_ = 1;
  std::vector<std::int32_t> next_;      // state * class_count_ + class
  std::vector<std::int32_t> terminal_;  // term ending at state, or -1
  std::vector<std::int32_t> dict_link_; // nearest terminal proper suffix, or -1
};

struct MatchResult {
  std::string post_id;
  std::vector<std::string> matched_terms;  // sorted

  bool opioid_related() const noexcept { return !matched_terms.empty(); }
};

/// Lexicon plus its compiled matcher; cheap to share across threads.
class LexiconClassifier {
 public:
  explicit LexiconClassifier(Lexicon lexicon);

  /// Normalizes the post text before matching.
  MatchResult match(const Post& post) const;

  /// One binary prediction per post, predictor id = "lexicon:<name>".
  /// `threads` = 0 uses the hardware concurrency.
  PredictionSet classify(const Corpus& corpus, unsigned threads = 0) const;

  const Lexicon& lexicon() const noexcept { return lexicon_; }
  const Matcher& matcher() const noexcept { return matcher_; }

 private:
  Lexicon lexicon_;
  Matcher matcher_;
};

MatchResult match(const Post& post, const Lexicon& lexicon);
PredictionSet classify_corpus(const Corpus& corpus, const Lexicon& lexicon, unsigned threads = 0);

}  // namespace slangscan
