#pragma once

// Synthetic corpora shared by the unit and acceptance tests.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "slangscan/corpus.hpp"
#include "slangscan/evaluator.hpp"
#include "slangscan/label.hpp"
#include "slangscan/lexicon.hpp"
#include "slangscan/mock_provider.hpp"
#include "slangscan/prediction.hpp"

namespace fixtures {

using slangscan::Label;

// Rows = predicted (OR, NOR, Unsure), columns = manual label.
using Matrix3 = std::array<std::array<std::size_t, 3>, 3>;

inline constexpr Matrix3 kFentyTable = {{{35, 0, 0}, {1, 412, 37}, {1, 3, 3}}};
inline constexpr Matrix3 kSmackGptTable = {{{25, 0, 5}, {2, 5709, 61}, {1, 56, 36}}};
inline constexpr Matrix3 kSmackLlamaTable = {{{25, 1, 7}, {3, 5742, 73}, {0, 22, 22}}};

// Words the scripted mock keys on. The reasoning cue decides the mock's
// answer; the refusal cue makes it refuse the whole request.
inline constexpr const char* kCueOpioid = "nodding off";
inline constexpr const char* kCueNot = "palette";
inline constexpr const char* kCueUnsure = "idk";
inline constexpr const char* kCueRefuse = "overdosed";

struct LabeledCorpus {
  slangscan::Corpus corpus;
  slangscan::GoldSet gold;
  // Label the keyword mock is scripted to return for each post, by id.
  std::vector<std::pair<std::string, Label>> expected;
};

/// Stream-shaped corpus: `background` posts without the term (some with
/// look-alikes such as "fentanyl"), plus one "fenty" post per cell of the
/// fenty table. When `with_refusal` is set, one post in the (OR, OR) cell
/// carries the refusal cue instead of the opioid cue.
LabeledCorpus spritzer_fenty(std::size_t background, bool with_refusal, std::uint64_t seed);

/// Script matching the cue words above; fallback is not-opioid-related.
slangscan::MockScript cue_script();

/// 28 opioid-related out of 5 895.
slangscan::GoldSet smack_gold();

/// 80 opioid and 80 non-opioid posts, 10 per ambiguous term each. Opioid
/// posts carry context words that the context mock recognizes; `with_context`
/// of them (per term) do.
struct SlangPairs {
  slangscan::Corpus opioid;
  slangscan::Corpus non_opioid;
};
SlangPairs emergent_slang_posts(std::size_t with_context_per_term = 8);
/// Mock that only knows context words, never the slang terms themselves.
slangscan::MockScript context_script();
/// The eight ambiguous terms as a lexicon.
slangscan::Lexicon ambiguous_lexicon();

/// Predictions with the given label counts, plus a corpus covering them.
struct PredictionFixture {
  slangscan::PredictionSet predictions;
  slangscan::Corpus corpus;
};
PredictionFixture prediction_counts(std::size_t opioid, std::size_t unsure, std::size_t refused, std::size_t api_error,
                                    std::size_t negative);

/// Random printable text with mixed ASCII, punctuation and multi-byte
/// letters, roughly `mean_len` bytes.
std::string random_text(std::uint64_t& state, std::size_t mean_len);
/// `n` synthetic posts of mean length `mean_len`.
slangscan::Corpus random_corpus(std::size_t n, std::size_t mean_len, std::uint64_t seed);
/// `n` distinct lowercase pseudo-words.
std::vector<std::string> random_terms(std::size_t n, std::uint64_t seed);

}  // namespace fixtures
