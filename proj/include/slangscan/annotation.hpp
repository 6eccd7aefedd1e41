#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "slangscan/corpus.hpp"
#include "slangscan/evaluator.hpp"
#include "slangscan/label.hpp"
#include "slangscan/prediction.hpp"

namespace slangscan {

/// Which predicted posts go into a manual-labeling session: every post whose
/// label is in `take_all_of`, plus a seeded uniform sample of the rest.
struct SamplingPolicy {
  std::set<Label> take_all_of{Label::OpioidRelated, Label::Unsure, Label::ContentRestrictionError,
                              Label::ApiError};
  /// Exactly one of these must be set.
  std::optional<double> negative_fraction;
  std::optional<std::size_t> negative_count;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
  /// Sample size for `available` remaining posts; fractions round half away
  /// from zero. Throws ContractError when a fixed count exceeds `available`.
  std::size_t sample_size(std::size_t available) const;
};

nlohmann::json to_json(const SamplingPolicy& p);
SamplingPolicy sampling_policy_from_json(const nlohmann::json& j);

struct SessionItem {
  std::string post_id;
  std::string text;
};

enum class ItemStatus { Pending, Labeled, Skipped };
std::string_view to_string(ItemStatus s) noexcept;

/// One entry of the append-only response log.
struct LogEntry {
  std::string post_id;
  std::string annotator;
  std::string action;  // "label" or "skip"
  std::optional<Label> label;
  std::string timestamp;
  std::string note;
};

/// Shuffled posts for manual labeling, without any predicted labels, plus
/// the log of annotator actions. Current responses are derived from the log:
/// the last action of an annotator on an item wins.
class AnnotationSession {
 public:
  AnnotationSession(std::string session_id, std::vector<SessionItem> items, nlohmann::json policy = {},
                    std::string created_at = {});

  const std::string& id() const noexcept { return id_; }
  const std::vector<SessionItem>& items() const noexcept { return items_; }
  const std::vector<LogEntry>& log() const noexcept { return log_; }
  const nlohmann::json& policy() const noexcept { return policy_; }
  const std::string& created_at() const noexcept { return created_at_; }
  bool contains(std::string_view post_id) const { return index_.count(std::string(post_id)) != 0; }

  /// Throws ContractError on an unknown post or an error label. Relabeling
  /// replaces the response and leaves an audit entry.
  void record_label(std::string_view post_id, std::string_view annotator, Label label, std::string timestamp = {});
  /// Defers an item; skipped items are not served again and never exported.
  void record_skip(std::string_view post_id, std::string_view annotator, std::string timestamp = {});

  ItemStatus status(std::string_view post_id, std::string_view annotator) const;
  std::optional<Label> response(std::string_view post_id, std::string_view annotator) const;
  /// Log entries for one (item, annotator), oldest first.
  std::vector<LogEntry> audit(std::string_view post_id, std::string_view annotator) const;

  /// Restricts an annotator to a seeded uniform subset of `n` items (the
  /// second-annotator workflow). Throws ContractError when n exceeds the
  /// session size.
  void assign_subset(std::string annotator, std::size_t n, std::uint64_t seed);
  /// Items an annotator is asked to label: the assigned subset, or all.
  std::vector<std::size_t> assigned(std::string_view annotator) const;
  const std::map<std::string, std::vector<std::string>>& assignments() const noexcept { return assignments_; }

  /// First pending item for the annotator, in session order.
  const SessionItem* next_for(std::string_view annotator) const;

  struct Progress {
    std::size_t assigned = 0;
    std::size_t labeled = 0;
    std::size_t skipped = 0;
  };
  Progress progress(std::string_view annotator) const;
  std::vector<std::string> annotators() const;

  /// Labeled items of one annotator, in session order.
  GoldSet responses_of(std::string_view annotator) const;

 private:
  std::size_t require(std::string_view post_id) const;
  void apply(const LogEntry& e);

  std::string id_;
  std::vector<SessionItem> items_;
  nlohmann::json policy_;
  std::string created_at_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<LogEntry> log_;
  std::map<std::string, std::vector<std::string>> assignments_;
  // annotator -> item index -> status/label
  std::map<std::string, std::unordered_map<std::size_t, std::pair<ItemStatus, Label>>, std::less<>> state_;

  friend AnnotationSession session_from_json(const nlohmann::json& j);
};

/// Throws ContractError when a prediction has no corpus post or the sample
/// cannot be drawn.
AnnotationSession build_session(const PredictionSet& predictions, const Corpus& corpus, const SamplingPolicy& policy,
                                std::string session_id = "session");

/// Throws ContractError when the annotator has no labels yet.
GoldSet export_gold(const AnnotationSession& session, std::string_view annotator);

/// The document never contains predicted labels.
nlohmann::json to_json(const AnnotationSession& s);
AnnotationSession session_from_json(const nlohmann::json& j);
/// Written to a temporary file and renamed into place.
void save_session(const AnnotationSession& s, const std::filesystem::path& path);
AnnotationSession load_session(const std::filesystem::path& path);

}  // namespace slangscan
