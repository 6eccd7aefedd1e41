#include "slangscan/slang_sim.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "slangscan/error.hpp"

namespace slangscan {

namespace {

std::vector<std::string> stored_keys(const std::map<std::string, std::string>& pairs, const MatchPolicy& policy) {
  std::vector<std::string> keys;
  std::set<std::string> seen;
  for (const auto& [key, value] : pairs) {
    if (value.empty()) throw ConfigError("substitution for '" + key + "' is empty");
    std::string stored;
    try {
      stored = normalize_term(key, policy);
    } catch (const LexiconError& e) {
      throw ConfigError(std::string("substitution key: ") + e.what());
    }
    if (!seen.insert(stored).second) throw ConfigError("substitution keys collide on '" + stored + "'");
    keys.push_back(std::move(stored));
  }
  return keys;
}

}  // namespace

SubstitutionMap::SubstitutionMap(std::map<std::string, std::string> pairs, MatchPolicy policy)
    : pairs_(std::move(pairs)), policy_(policy), matcher_(stored_keys(pairs_, policy_), policy_) {
  if (pairs_.empty()) throw ConfigError("substitution map is empty");
  std::set<std::string> values;
  for (const auto& [key, value] : pairs_) {
    if (!values.insert(value).second) throw ConfigError("substitution value '" + value + "' is used twice");
    replacement_.push_back(value);
  }
  for (const auto& value : values) {
    if (matcher_.matches(value)) throw ConfigError("substitution value '" + value + "' contains a key");
  }
}

SubstitutionMap SubstitutionMap::inverse() const {
  std::map<std::string, std::string> inv;
  for (const auto& [key, value] : pairs_) inv.emplace(value, key);
  return SubstitutionMap(std::move(inv), policy_);
}

SubstitutionMap::Result SubstitutionMap::apply(std::string_view text) const {
  std::vector<MatchSpan> spans = matcher_.find_all(text);
  std::sort(spans.begin(), spans.end(), [](const MatchSpan& a, const MatchSpan& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end > b.end;
  });
  Result r;
  r.text.reserve(text.size());
  std::size_t cursor = 0;
  for (const auto& s : spans) {
    if (s.begin < cursor) continue;
    r.text.append(text.substr(cursor, s.begin - cursor));
    r.text.append(replacement_[s.term]);
    cursor = s.end;
    ++r.count;
  }
  r.text.append(text.substr(cursor));
  return r;
}

bool SubstitutionMap::occurs(std::string_view text) const { return matcher_.matches(text); }

SubstitutionMap default_substitution_map() {
  return SubstitutionMap({{"fenty", "Pikachu"},
                          {"smack", "Snorlax"},
                          {"lean", "Bulbasaur"},
                          {"oxy", "Jigglypuff"},
                          {"blues", "Squirtle"},
                          {"H", "Eevee"},
                          {"fetty", "Charmander"},
                          {"tar", "Meowth"}});
}

SubstitutionMap substitution_map_from_json(const nlohmann::json& j) {
  try {
    auto pairs = j.at("pairs").get<std::map<std::string, std::string>>();
    MatchPolicy policy;
    if (auto p = j.find("policy"); p != j.end()) policy = p->get<MatchPolicy>();
    return SubstitutionMap(std::move(pairs), policy);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("substitution map: ") + e.what());
  }
}

SubstitutionMap load_substitution_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open substitution map " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return substitution_map_from_json(j);
}

nlohmann::json to_json(const SubstitutionMap& map) {
  return nlohmann::json{{"pairs", map.pairs()}, {"policy", map.policy()}};
}

Post substitute(const Post& post, const SubstitutionMap& map) {
  Post out = post;
  auto r = map.apply(post.text);
  out.text = std::move(r.text);
  if (!out.meta.is_object()) out.meta = nlohmann::json::object();
  out.meta["substitutions"] = r.count;
  return out;
}

PairedDataset build_paired_dataset(const Corpus& opioid_posts, const Corpus& non_opioid_posts,
                                   const SubstitutionMap& map) {
  if (opioid_posts.empty() || non_opioid_posts.empty()) {
    throw ContractError("paired dataset needs posts from both classes");
  }
  std::vector<Post> original, modified;
  original.reserve(opioid_posts.size() + non_opioid_posts.size());
  modified.reserve(original.capacity());
  auto add = [&](const Corpus& c, std::string_view cls) {
    for (const Post& p : c) {
      Post tagged = p;
      if (!tagged.meta.is_object()) tagged.meta = nlohmann::json::object();
      tagged.meta["class"] = cls;
      Post changed = substitute(tagged, map);
      if (changed.meta["substitutions"].get<std::size_t>() == 0) {
        throw ContractError("post '" + p.id + "' contains none of the substitution keys");
      }
      original.push_back(std::move(tagged));
      modified.push_back(std::move(changed));
    }
  };
  add(opioid_posts, "opioid-related");
  add(non_opioid_posts, "not-opioid-related");
  Provenance prov{opioid_posts.provenance().source + " + " + non_opioid_posts.provenance().source, utc_timestamp(), {}};
  Corpus orig(std::move(original), prov);
  Corpus mod = orig.derive(std::move(modified), "substitute:" + to_json(map).dump());
  return {std::move(orig), std::move(mod)};
}

}  // namespace slangscan
