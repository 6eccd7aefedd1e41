#include "slangscan/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "slangscan/error.hpp"
#include "slangscan/random.hpp"

namespace slangscan {

void SamplingPolicy::validate() const {
  if (negative_fraction.has_value() == negative_count.has_value()) {
    throw ConfigError("sampling policy needs exactly one of negative_fraction and negative_count");
  }
  if (negative_fraction && !(*negative_fraction >= 0.0 && *negative_fraction <= 1.0)) {
    throw ConfigError("negative_fraction must be within [0, 1]");
  }
}

std::size_t SamplingPolicy::sample_size(std::size_t available) const {
  validate();
  if (negative_count) {
    if (*negative_count > available) {
      throw ContractError("negative_count " + std::to_string(*negative_count) + " exceeds the " +
                          std::to_string(available) + " posts available");
    }
    return *negative_count;
  }
  // std::round rounds halves away from zero.
  const auto n = static_cast<std::size_t>(std::round(*negative_fraction * static_cast<double>(available)));
  return std::min(n, available);
}

nlohmann::json to_json(const SamplingPolicy& p) {
  nlohmann::json take = nlohmann::json::array();
  for (Label l : p.take_all_of) take.push_back(to_string(l));
  nlohmann::json j{{"take_all_of", take}, {"seed", p.seed}};
  j["negative_fraction"] = p.negative_fraction ? nlohmann::json(*p.negative_fraction) : nlohmann::json(nullptr);
  j["negative_count"] = p.negative_count ? nlohmann::json(*p.negative_count) : nlohmann::json(nullptr);
  return j;
}

SamplingPolicy sampling_policy_from_json(const nlohmann::json& j) {
  SamplingPolicy p;
  try {
    if (auto t = j.find("take_all_of"); t != j.end()) {
      p.take_all_of.clear();
      for (const auto& v : *t) {
        auto l = parse_label(v.get<std::string>());
        if (!l) throw ConfigError("sampling policy: unknown label " + v.dump());
        p.take_all_of.insert(*l);
      }
    }
    if (auto f = j.find("negative_fraction"); f != j.end() && !f->is_null()) p.negative_fraction = f->get<double>();
    if (auto c = j.find("negative_count"); c != j.end() && !c->is_null()) p.negative_count = c->get<std::size_t>();
    p.seed = j.value("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sampling policy: ") + e.what());
  }
  p.validate();
  return p;
}

std::string_view to_string(ItemStatus s) noexcept {
  switch (s) {
    case ItemStatus::Pending: return "pending";
    case ItemStatus::Labeled: return "labeled";
    case ItemStatus::Skipped: return "skipped";
  }
  return "pending";
}

// ---------------------------------------------------------------------------

AnnotationSession::AnnotationSession(std::string session_id, std::vector<SessionItem> items, nlohmann::json policy,
                                     std::string created_at)
    : id_(std::move(session_id)),
      items_(std::move(items)),
      policy_(std::move(policy)),
      created_at_(created_at.empty() ? utc_timestamp() : std::move(created_at)) {
  if (id_.empty()) throw ContractError("session id is empty");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].post_id, i).second) {
      throw ContractError("session item '" + items_[i].post_id + "' appears twice");
    }
  }
}

std::size_t AnnotationSession::require(std::string_view post_id) const {
  auto it = index_.find(std::string(post_id));
  if (it == index_.end()) throw ContractError("post '" + std::string(post_id) + "' is not in session " + id_);
  return it->second;
}

void AnnotationSession::apply(const LogEntry& e) {
  const std::size_t i = require(e.post_id);
  auto& slot = state_[e.annotator][i];
  if (e.action == "label") {
    slot = {ItemStatus::Labeled, *e.label};
  } else {
    slot = {ItemStatus::Skipped, Label::Unsure};
  }
  log_.push_back(e);
}

void AnnotationSession::record_label(std::string_view post_id, std::string_view annotator, Label label,
                                     std::string timestamp) {
  if (!is_semantic(label)) throw ContractError("annotators may only use opioid-related, not-opioid-related or unsure");
  if (annotator.empty()) throw ContractError("annotator id is empty");
  const std::size_t i = require(post_id);
  LogEntry e{std::string(post_id), std::string(annotator), "label", label,
             timestamp.empty() ? utc_timestamp() : std::move(timestamp), {}};
  if (auto a = state_.find(annotator); a != state_.end()) {
    if (auto s = a->second.find(i); s != a->second.end() && s->second.first == ItemStatus::Labeled) {
      e.note = "relabel from " + std::string(to_string(s->second.second));
    }
  }
  apply(e);
}

void AnnotationSession::record_skip(std::string_view post_id, std::string_view annotator, std::string timestamp) {
  if (annotator.empty()) throw ContractError("annotator id is empty");
  require(post_id);
  apply(LogEntry{std::string(post_id), std::string(annotator), "skip", std::nullopt,
                 timestamp.empty() ? utc_timestamp() : std::move(timestamp), {}});
}

ItemStatus AnnotationSession::status(std::string_view post_id, std::string_view annotator) const {
  const std::size_t i = require(post_id);
  auto a = state_.find(annotator);
  if (a == state_.end()) return ItemStatus::Pending;
  auto s = a->second.find(i);
  return s == a->second.end() ? ItemStatus::Pending : s->second.first;
}

std::optional<Label> AnnotationSession::response(std::string_view post_id, std::string_view annotator) const {
  const std::size_t i = require(post_id);
  auto a = state_.find(annotator);
  if (a == state_.end()) return std::nullopt;
  auto s = a->second.find(i);
  if (s == a->second.end() || s->second.first != ItemStatus::Labeled) return std::nullopt;
  return s->second.second;
}

std::vector<LogEntry> AnnotationSession::audit(std::string_view post_id, std::string_view annotator) const {
  require(post_id);
  std::vector<LogEntry> out;
  for (const auto& e : log_) {
    if (e.post_id == post_id && e.annotator == annotator) out.push_back(e);
  }
  return out;
}

void AnnotationSession::assign_subset(std::string annotator, std::size_t n, std::uint64_t seed) {
  if (annotator.empty()) throw ContractError("annotator id is empty");
  std::vector<std::string> ids;
  for (std::size_t i : sample_indices(items_.size(), n, seed)) ids.push_back(items_[i].post_id);
  assignments_[std::move(annotator)] = std::move(ids);
}

std::vector<std::size_t> AnnotationSession::assigned(std::string_view annotator) const {
  std::vector<std::size_t> out;
  if (auto it = assignments_.find(std::string(annotator)); it != assignments_.end()) {
    for (const auto& id : it->second) out.push_back(require(id));
    std::sort(out.begin(), out.end());
    return out;
  }
  out.resize(items_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

const SessionItem* AnnotationSession::next_for(std::string_view annotator) const {
  auto a = state_.find(annotator);
  for (std::size_t i : assigned(annotator)) {
    if (a == state_.end() || a->second.find(i) == a->second.end()) return &items_[i];
  }
  return nullptr;
}

AnnotationSession::Progress AnnotationSession::progress(std::string_view annotator) const {
  Progress p;
  const auto mine = assigned(annotator);
  p.assigned = mine.size();
  auto a = state_.find(annotator);
  if (a == state_.end()) return p;
  for (const auto& [i, st] : a->second) {
    (st.first == ItemStatus::Labeled ? p.labeled : p.skipped) += 1;
  }
  return p;
}

std::vector<std::string> AnnotationSession::annotators() const {
  std::set<std::string> names;
  for (const auto& [name, _] : state_) names.insert(name);
  for (const auto& [name, _] : assignments_) names.insert(name);
  return {names.begin(), names.end()};
}

GoldSet AnnotationSession::responses_of(std::string_view annotator) const {
  GoldSet gold;
  auto a = state_.find(annotator);
  if (a == state_.end()) return gold;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    auto s = a->second.find(i);
    if (s != a->second.end() && s->second.first == ItemStatus::Labeled) gold.add(items_[i].post_id, s->second.second);
  }
  return gold;
}

// ---------------------------------------------------------------------------

AnnotationSession build_session(const PredictionSet& predictions, const Corpus& corpus, const SamplingPolicy& policy,
                                std::string session_id) {
  policy.validate();
  std::vector<const Post*> kept, rest;
  for (const auto& p : predictions.entries()) {
    const Post* post = corpus.find(p.post_id);
    if (post == nullptr) throw ContractError("prediction for '" + p.post_id + "' has no post in the corpus");
    (policy.take_all_of.count(p.reported()) ? kept : rest).push_back(post);
  }
  const std::size_t n = policy.sample_size(rest.size());
  for (std::size_t i : sample_indices(rest.size(), n, policy.seed)) kept.push_back(rest[i]);

  // Second stream so the shuffle does not correlate with the sample.
  Rng rng(policy.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = kept.size(); i > 1; --i) std::swap(kept[i - 1], kept[rng.below(i)]);

  std::vector<SessionItem> items;
  items.reserve(kept.size());
  for (const Post* p : kept) items.push_back(SessionItem{p->id, p->text});
  return AnnotationSession(std::move(session_id), std::move(items), to_json(policy));
}

GoldSet export_gold(const AnnotationSession& session, std::string_view annotator) {
  GoldSet gold = session.responses_of(annotator);
  if (gold.empty()) throw ContractError("annotator '" + std::string(annotator) + "' has no labels in " + session.id());
  return gold;
}

nlohmann::json to_json(const AnnotationSession& s) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : s.items()) items.push_back({{"post_id", it.post_id}, {"text", it.text}});
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : s.log()) {
    nlohmann::json je{{"post_id", e.post_id}, {"annotator", e.annotator}, {"action", e.action},
                      {"timestamp", e.timestamp}};
    if (e.label) je["label"] = to_string(*e.label);
    if (!e.note.empty()) je["note"] = e.note;
    log.push_back(std::move(je));
  }
  return nlohmann::json{{"session_id", s.id()},     {"created_at", s.created_at()}, {"policy", s.policy()},
                        {"items", items},           {"log", log},
                        {"assignments", s.assignments()}};
}

AnnotationSession session_from_json(const nlohmann::json& j) {
  try {
    std::vector<SessionItem> items;
    for (const auto& it : j.at("items")) {
      items.push_back(SessionItem{it.at("post_id").get<std::string>(), it.at("text").get<std::string>()});
    }
    AnnotationSession s(j.at("session_id").get<std::string>(), std::move(items), j.value("policy", nlohmann::json{}),
                        j.value("created_at", std::string{}));
    s.assignments_ = j.value("assignments", decltype(s.assignments_){});
    for (const auto& id_list : s.assignments_) {
      for (const auto& id : id_list.second) s.require(id);
    }
    for (const auto& je : j.value("log", nlohmann::json::array())) {
      LogEntry e;
      e.post_id = je.at("post_id").get<std::string>();
      e.annotator = je.at("annotator").get<std::string>();
      e.action = je.at("action").get<std::string>();
      e.timestamp = je.value("timestamp", std::string{});
      e.note = je.value("note", std::string{});
      if (e.action == "label") {
        auto l = parse_label(je.at("label").get<std::string>());
        if (!l || !is_semantic(*l)) throw ContractError("session log has a non-semantic label");
        e.label = *l;
      } else if (e.action != "skip") {
        throw ContractError("session log has unknown action '" + e.action + "'");
      }
      s.apply(e);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("session document: ") + e.what());
  }
}

void save_session(const AnnotationSession& s, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << to_json(s).dump(1) << '\n';
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

AnnotationSession load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open session " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path.string() + ": " + e.what());
  }
  return session_from_json(j);
}

}  // namespace slangscan
