#include "slangscan/error.hpp"

namespace slangscan {

namespace {

std::string describe_missing(const std::vector<std::string>& ids) {
  std::string msg = std::to_string(ids.size()) + " gold item(s) have no prediction:";
  std::size_t shown = 0;
  for (const auto& id : ids) {
    if (shown++ == 10) {
      msg += " ...";
      break;
    }
    msg += ' ';
    msg += id;
  }
  return msg;
}

}  // namespace

MissingPredictionError::MissingPredictionError(std::vector<std::string> ids)
    : Error(describe_missing(ids)), ids_(std::move(ids)) {}

}  // namespace slangscan
