#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace slangscan {

/// Topical judgment for one post. The two error values only ever come out
/// of adjudication; human annotators use the first three.
enum class Label {
  OpioidRelated,
  NotOpioidRelated,
  Unsure,
  ContentRestrictionError,
  ApiError,
};

inline constexpr std::array<Label, 5> kAllLabels = {
    Label::OpioidRelated, Label::NotOpioidRelated, Label::Unsure,
    Label::ContentRestrictionError, Label::ApiError};

inline constexpr std::array<Label, 3> kSemanticLabels = {
    Label::OpioidRelated, Label::NotOpioidRelated, Label::Unsure};

constexpr bool is_semantic(Label l) noexcept {
  return l == Label::OpioidRelated || l == Label::NotOpioidRelated || l == Label::Unsure;
}

constexpr bool is_error(Label l) noexcept { return !is_semantic(l); }

constexpr std::size_t index_of(Label l) noexcept { return static_cast<std::size_t>(l); }

/// Wire name: "opioid-related", "not-opioid-related", "unsure",
/// "content-restriction-error", "api-error".
std::string_view to_string(Label l) noexcept;

/// Accepts the wire names plus a few spellings seen in hand-made gold files
/// ("not opioid-related", "not_opioid_related", ...). Case-insensitive.
std::optional<Label> parse_label(std::string_view s) noexcept;

/// Human-facing row/column title used in terminal tables.
std::string_view display_name(Label l) noexcept;

}  // namespace slangscan
