#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slangscan/label.hpp"

namespace slangscan {

struct Prediction {
  std::string post_id;
  Label label = Label::NotOpioidRelated;
  /// Original label when `label` was rewritten by error resolution.
  std::optional<Label> shadow;
  std::optional<std::string> transcript_ref;

  /// The label a confusion matrix row is keyed on.
  Label reported() const noexcept { return shadow.value_or(label); }

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// At most one prediction per post, kept in insertion order.
class PredictionSet {
 public:
  PredictionSet() = default;
  explicit PredictionSet(std::string predictor_id) : predictor_id_(std::move(predictor_id)) {}

  const std::string& predictor_id() const noexcept { return predictor_id_; }
  void set_predictor_id(std::string id) { predictor_id_ = std::move(id); }

  /// Insert, or replace in place when the post already has an entry.
  void set(Prediction p);
  const Prediction* find(std::string_view post_id) const;
  bool contains(std::string_view post_id) const { return find(post_id) != nullptr; }

  std::span<const Prediction> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  friend bool operator==(const PredictionSet& a, const PredictionSet& b) {
    return a.predictor_id_ == b.predictor_id_ && a.entries_ == b.entries_;
  }

 private:
  std::string predictor_id_;
  std::vector<Prediction> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One JSON object per line:
/// {"post_id", "label", "shadow_label": string|null, "predictor_id"}.
/// transcript_ref is written when present.
void write_predictions_jsonl(std::ostream& out, const PredictionSet& set);
PredictionSet read_predictions_jsonl(std::istream& in);

}  // namespace slangscan
