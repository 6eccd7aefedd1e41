#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>

#include <json.hpp>

#include "slangscan/corpus.hpp"
#include "slangscan/lexicon.hpp"
#include "slangscan/match_policy.hpp"

namespace slangscan {

/// Real slang term -> invented replacement. Keys are matched with lexicon
/// semantics; values are inserted verbatim.
class SubstitutionMap {
 public:
  /// Throws ConfigError when a key or value is empty, two keys collide after
  /// normalization, values repeat, or a value contains a key (which would
  /// make substitution cascade).
  SubstitutionMap(std::map<std::string, std::string> pairs, MatchPolicy policy = {});

  const std::map<std::string, std::string>& pairs() const noexcept { return pairs_; }
  const MatchPolicy& policy() const noexcept { return policy_; }
  /// Value -> key, with the same policy.
  SubstitutionMap inverse() const;

  struct Result {
    std::string text;
    std::size_t count = 0;
  };
  /// Leftmost-longest, non-overlapping replacement over `text`.
  Result apply(std::string_view text) const;
  /// True when some key occurs in `text`.
  bool occurs(std::string_view text) const;

 private:
  std::map<std::string, std::string> pairs_;
  MatchPolicy policy_;
  std::vector<std::string> replacement_;  // by matcher term index
  Matcher matcher_;
};

/// Eight ambiguous terms mapped to Pokemon names. Illustrative only.
SubstitutionMap default_substitution_map();

/// {"pairs": {...}, "policy": {...}}; policy is optional.
SubstitutionMap substitution_map_from_json(const nlohmann::json& j);
SubstitutionMap load_substitution_map(const std::filesystem::path& path);
nlohmann::json to_json(const SubstitutionMap& map);

/// Copy of `post` with every key replaced; meta["substitutions"] holds the
/// count.
Post substitute(const Post& post, const SubstitutionMap& map);

struct PairedDataset {
  Corpus original;
  Corpus modified;
};

/// Concatenates the two classes (meta["class"] is "opioid-related" or
/// "not-opioid-related") and substitutes every post. Ids are shared between
/// the two corpora. Throws ContractError when a corpus is empty or a post
/// carries none of the keys.
PairedDataset build_paired_dataset(const Corpus& opioid_posts, const Corpus& non_opioid_posts,
                                   const SubstitutionMap& map);

}  // namespace slangscan
