#include "slangscan/label.hpp"

#include <string>

#include "slangscan/text.hpp"

namespace slangscan {

std::string_view to_string(Label l) noexcept {
  switch (l) {
    case Label::OpioidRelated: return "opioid-related";
    case Label::NotOpioidRelated: return "not-opioid-related";
    case Label::Unsure: return "unsure";
    case Label::ContentRestrictionError: return "content-restriction-error";
    case Label::ApiError: return "api-error";
  }
  return "unknown";
}

std::string_view display_name(Label l) noexcept {
  switch (l) {
    case Label::OpioidRelated: return "Opioid-related";
    case Label::NotOpioidRelated: return "Not opioid-related";
    case Label::Unsure: return "Unsure";
    case Label::ContentRestrictionError: return "Content Restriction Error";
    case Label::ApiError: return "API Error";
  }
  return "Unknown";
}

std::optional<Label> parse_label(std::string_view s) noexcept {
  std::string key = text::ascii_lower(s);
  for (char& c : key) {
    if (c == '_' || c == ' ') c = '-';
  }
  while (!key.empty() && key.back() == '\r') key.pop_back();
  for (Label l : kAllLabels) {
    if (key == to_string(l)) return l;
  }
  if (key == "not-opioid" || key == "non-opioid-related") return Label::NotOpioidRelated;
  if (key == "opioid") return Label::OpioidRelated;
  return std::nullopt;
}

}  // namespace slangscan
