#include "slangscan/prediction.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "slangscan/error.hpp"

namespace slangscan {

void PredictionSet::set(Prediction p) {
  auto it = index_.find(p.post_id);
  if (it != index_.end()) {
    entries_[it->second] = std::move(p);
    return;
  }
  index_.emplace(p.post_id, entries_.size());
  entries_.push_back(std::move(p));
}

const Prediction* PredictionSet::find(std::string_view post_id) const {
  auto it = index_.find(std::string(post_id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

void write_predictions_jsonl(std::ostream& out, const PredictionSet& set) {
  for (const auto& p : set.entries()) {
    nlohmann::ordered_json j;
    j["post_id"] = p.post_id;
    j["label"] = to_string(p.label);
    j["shadow_label"] = p.shadow ? nlohmann::ordered_json(to_string(*p.shadow)) : nullptr;
    j["predictor_id"] = set.predictor_id();
    if (p.transcript_ref) j["transcript_ref"] = *p.transcript_ref;
    out << j.dump() << '\n';
  }
}

PredictionSet read_predictions_jsonl(std::istream& in) {
  PredictionSet set;
  bool first = true;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "predictions line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IngestError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("post_id") || !j.contains("label")) {
      throw IngestError(where + ": expected post_id and label");
    }
    Prediction p;
    p.post_id = j.at("post_id").get<std::string>();
    auto label = parse_label(j.at("label").get<std::string>());
    if (!label) throw IngestError(where + ": unknown label");
    p.label = *label;
    if (auto it = j.find("shadow_label"); it != j.end() && !it->is_null()) {
      auto shadow = parse_label(it->get<std::string>());
      if (!shadow) throw IngestError(where + ": unknown shadow_label");
      p.shadow = shadow;
    }
    if (auto it = j.find("transcript_ref"); it != j.end() && it->is_string()) {
      p.transcript_ref = it->get<std::string>();
    }
    std::string predictor = j.value("predictor_id", std::string{});
    if (first) {
      set.set_predictor_id(predictor);
      first = false;
    } else if (predictor != set.predictor_id()) {
      throw IngestError(where + ": mixed predictor ids ('" + set.predictor_id() + "' and '" +
                        predictor + "')");
    }
    set.set(std::move(p));
  }
  return set;
}

}  // namespace slangscan
