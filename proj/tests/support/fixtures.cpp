#include "fixtures.hpp"

#include <algorithm>
#include <set>

#include "slangscan/random.hpp"

namespace fixtures {

namespace {

using slangscan::Corpus;
using slangscan::Post;
using slangscan::Provenance;

std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t pick(std::uint64_t& s, std::size_t n) { return static_cast<std::size_t>(splitmix(s) % n); }

Post make_post(std::string id, std::string text) {
  Post p;
  p.id = std::move(id);
  p.text = std::move(text);
  p.source = "fixture";
  return p;
}

constexpr std::array<const char*, 4> kOpioidFenty = {
    "that fenty had me nodding off on the couch", "two lines of Fenty and i was nodding off by noon",
    "still nodding off from the fenty last night", "cut with fenty again, whole crew nodding off"};
constexpr std::array<const char*, 4> kNotFenty = {
    "the new Fenty palette is everything", "Fenty palette restock finally happened",
    "saving up for that fenty palette tbh", "#Fenty palette swatches look unreal"};
constexpr std::array<const char*, 4> kUnsureFenty = {
    "idk man fenty is wild", "fenty again?? idk what to say", "idk who needs to hear this but fenty",
    "my cousin said fenty, idk"};
constexpr std::array<const char*, 8> kBackground = {
    "fentanyl deaths rose again in the county report", "just watched the game, what a finish",
    "coffee first, then emails", "Fentybeauty ad keeps popping up on my feed",
    "traffic on the bridge is awful today", "new album drops friday!!",
    "anyone know a good dentist downtown?", "the fentanyl crisis needs real funding"};

}  // namespace

LabeledCorpus spritzer_fenty(std::size_t background, bool with_refusal, std::uint64_t seed) {
  std::uint64_t s = seed;
  std::vector<Post> fenty;
  LabeledCorpus out;
  std::size_t serial = 0;
  bool refusal_placed = !with_refusal;
  for (std::size_t r = 0; r < 3; ++r) {
    const Label predicted = slangscan::kSemanticLabels[r];
    for (std::size_t c = 0; c < 3; ++c) {
      const Label manual = slangscan::kSemanticLabels[c];
      for (std::size_t k = 0; k < kFentyTable[r][c]; ++k) {
        std::string id = "f" + std::to_string(++serial);
        std::string text;
        Label scripted = predicted;
        if (!refusal_placed && predicted == Label::OpioidRelated && manual == Label::OpioidRelated) {
          text = "my brother overdosed on fenty last week";
          scripted = Label::ContentRestrictionError;
          refusal_placed = true;
        } else if (predicted == Label::OpioidRelated) {
          text = kOpioidFenty[pick(s, kOpioidFenty.size())];
        } else if (predicted == Label::NotOpioidRelated) {
          text = kNotFenty[pick(s, kNotFenty.size())];
        } else {
          text = kUnsureFenty[pick(s, kUnsureFenty.size())];
        }
        fenty.push_back(make_post(id, text));
        out.gold.add(id, manual);
        out.expected.emplace_back(id, scripted);
      }
    }
  }

  // Interleave the term posts into the background at seeded positions.
  std::vector<Post> posts;
  posts.reserve(background + fenty.size());
  for (std::size_t i = 0; i < background; ++i) {
    posts.push_back(make_post("b" + std::to_string(i + 1), kBackground[pick(s, kBackground.size())]));
  }
  for (auto& p : fenty) {
    const std::size_t at = posts.empty() ? 0 : pick(s, posts.size() + 1);
    posts.insert(posts.begin() + static_cast<std::ptrdiff_t>(at), std::move(p));
  }
  out.corpus = Corpus(std::move(posts), Provenance{"fixture:spritzer", "2026-01-01T00:00:00Z", {}});
  return out;
}

slangscan::MockScript cue_script() {
  slangscan::MockScript s;
  s.rules = {{kCueOpioid, Label::OpioidRelated}, {kCueNot, Label::NotOpioidRelated}, {kCueUnsure, Label::Unsure}};
  s.fallback = Label::NotOpioidRelated;
  s.refuse_if_contains = {kCueRefuse};
  return s;
}

slangscan::GoldSet smack_gold() {
  slangscan::GoldSet g;
  for (std::size_t i = 0; i < 5895; ++i) {
    g.add("s" + std::to_string(i + 1), i < 28 ? Label::OpioidRelated : Label::NotOpioidRelated);
  }
  return g;
}

namespace {

struct TermSenses {
  const char* term;
  const char* other_sense;
};

constexpr std::array<TermSenses, 8> kTerms = {{{"fenty", "the new fenty highlighter is gorgeous"},
                                               {"smack", "stop talking smack about my team"},
                                               {"lean", "lean protein and veggies for dinner"},
                                               {"oxy", "oxy clean got the stain right out"},
                                               {"blues", "listening to old blues records"},
                                               {"H", "grabbed a jacket at H&M"},
                                               {"fetty", "fetty wap came on the radio"},
                                               {"tar", "the roof needs fresh tar"}}};

constexpr std::array<const char*, 10> kTails = {"",          " today",        " lol",        " again",
                                                " honestly", " with my sister", " this week", " ngl",
                                                " fr",       " before work"};

constexpr std::array<const char*, 4> kContext = {"need my {} fix before the withdrawal hits",
                                                 "{} had me nodding in the car",
                                                 "my plug is out of {} till friday",
                                                 "been dope sick since the {} ran out"};
constexpr std::array<const char*, 2> kNoContext = {"picked up some {} earlier", "thinking about {} again"};

std::string fill(std::string_view tpl, std::string_view term) {
  std::string s(tpl);
  s.replace(s.find("{}"), 2, term);
  return s;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

SlangPairs emergent_slang_posts(std::size_t with_context_per_term) {
  std::vector<Post> op, non;
  for (const auto& t : kTerms) {
    for (std::size_t i = 0; i < 10; ++i) {
      const std::string base = i < with_context_per_term ? fill(kContext[i % kContext.size()], t.term)
                                                         : fill(kNoContext[i % kNoContext.size()], t.term);
      op.push_back(make_post("op-" + lower(t.term) + "-" + std::to_string(i), base + kTails[i]));
      non.push_back(make_post("non-" + lower(t.term) + "-" + std::to_string(i), std::string(t.other_sense) + kTails[i]));
    }
  }
  return {Corpus(std::move(op), Provenance{"fixture:slang-opioid", "2026-01-01T00:00:00Z", {}}),
          Corpus(std::move(non), Provenance{"fixture:slang-other", "2026-01-01T00:00:00Z", {}})};
}

slangscan::MockScript context_script() {
  slangscan::MockScript s;
  for (const char* cue : {"withdrawal", "nodding", "my plug", "dope sick"}) s.rules.push_back({cue, Label::OpioidRelated});
  s.fallback = Label::NotOpioidRelated;
  return s;
}

slangscan::Lexicon ambiguous_lexicon() {
  std::vector<std::string> terms;
  for (const auto& t : kTerms) terms.emplace_back(t.term);
  return slangscan::Lexicon("ambiguous-8", std::move(terms));
}

PredictionFixture prediction_counts(std::size_t opioid, std::size_t unsure, std::size_t refused, std::size_t api_error,
                                    std::size_t negative) {
  PredictionFixture f{slangscan::PredictionSet("fixture"), {}};
  std::vector<Post> posts;
  std::size_t serial = 0;
  auto add = [&](std::size_t n, Label l) {
    for (std::size_t i = 0; i < n; ++i) {
      std::string id = "p" + std::to_string(++serial);
      posts.push_back(make_post(id, "post number " + std::to_string(serial)));
      f.predictions.set(slangscan::Prediction{id, l, std::nullopt, std::nullopt});
    }
  };
  add(negative, Label::NotOpioidRelated);
  add(opioid, Label::OpioidRelated);
  add(unsure, Label::Unsure);
  add(refused, Label::ContentRestrictionError);
  add(api_error, Label::ApiError);
  f.corpus = Corpus(std::move(posts), Provenance{"fixture:predictions", "2026-01-01T00:00:00Z", {}});
  return f;
}

namespace {

constexpr std::array<const char*, 24> kSyllables = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ba", "de", "fi", "go",
                                                    "hu", "ja", "ke", "li", "mo", "nu", "pe", "qi", "ro", "su", "ta", "we"};
constexpr std::array<const char*, 10> kExtras = {"é", "ñ", "ß", "日本", "😀", "Ω", "ç", "ü", "лол", "2024"};
constexpr std::array<const char*, 8> kPunct = {", ", ". ", "! ", "? ", " - ", " #", " @", "'s "};

}  // namespace

std::string random_text(std::uint64_t& s, std::size_t mean_len) {
  const std::size_t target = mean_len / 2 + pick(s, mean_len + 1);
  std::string out;
  while (out.size() < target) {
    if (!out.empty()) out += pick(s, 6) == 0 ? kPunct[pick(s, kPunct.size())] : " ";
    if (pick(s, 12) == 0) {
      out += kExtras[pick(s, kExtras.size())];
      continue;
    }
    std::string word;
    const std::size_t syl = 1 + pick(s, 3);
    for (std::size_t k = 0; k < syl; ++k) word += kSyllables[pick(s, kSyllables.size())];
    if (pick(s, 8) == 0) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    out += word;
  }
  return out;
}

Corpus random_corpus(std::size_t n, std::size_t mean_len, std::uint64_t seed) {
  std::uint64_t s = seed;
  std::vector<Post> posts;
  posts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) posts.push_back(make_post("r" + std::to_string(i), random_text(s, mean_len)));
  return Corpus(std::move(posts), Provenance{"fixture:random", "2026-01-01T00:00:00Z", {}});
}

std::vector<std::string> random_terms(std::size_t n, std::uint64_t seed) {
  std::uint64_t s = seed;
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string w;
    const std::size_t syl = 2 + pick(s, 3);
    for (std::size_t k = 0; k < syl; ++k) w += kSyllables[pick(s, kSyllables.size())];
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

}  // namespace fixtures
