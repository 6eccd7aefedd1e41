#pragma once

#include <json.hpp>

namespace slangscan {

struct MatchPolicy {
  bool case_insensitive = true;
  /// Term must be flanked by non-alphanumeric characters or string edges.
  bool word_boundary = true;
  /// Terms may contain internal spaces.
  bool allow_multiword = true;

  friend bool operator==(const MatchPolicy&, const MatchPolicy&) = default;
};

void to_json(nlohmann::json& j, const MatchPolicy& p);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, MatchPolicy& p);

}  // namespace slangscan
