#include "slangscan/annotation_server.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "slangscan/error.hpp"

namespace slangscan {

namespace {

struct Entry {
  explicit Entry(AnnotationSession s) : session(std::move(s)) {}
  mutable std::shared_mutex mu;
  AnnotationSession session;
};

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

nlohmann::json summary(const AnnotationSession& s) {
  nlohmann::json annotators = nlohmann::json::object();
  for (const auto& a : s.annotators()) {
    const auto p = s.progress(a);
    annotators[a] = {{"assigned", p.assigned}, {"labeled", p.labeled}, {"skipped", p.skipped}};
  }
  return {{"session_id", s.id()}, {"created_at", s.created_at()}, {"items", s.items().size()},
          {"annotators", annotators}};
}

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
  }
  return true;
}

}  // namespace

struct AnnotationServer::Impl {
  ServerOptions options;
  httplib::Server http;
  std::thread thread;
  mutable std::shared_mutex map_mu;
  std::map<std::string, std::shared_ptr<Entry>> sessions;
  std::atomic<unsigned> next_id{1};

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::shared_lock lock(map_mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void persist(const AnnotationSession& s) const {
    if (options.session_dir.empty()) return;
    save_session(s, options.session_dir / (s.id() + ".json"));
  }

  void insert(AnnotationSession s) {
    if (!valid_session_id(s.id())) throw ContractError("invalid session id '" + s.id() + "'");
    std::unique_lock lock(map_mu);
    if (sessions.count(s.id())) throw ContractError("session '" + s.id() + "' already exists");
    persist(s);
    auto id = s.id();
    sessions.emplace(std::move(id), std::make_shared<Entry>(std::move(s)));
  }

  std::filesystem::path resolve(const std::string& relative) const {
    namespace fs = std::filesystem;
    const fs::path root = fs::weakly_canonical(options.data_root.empty() ? fs::current_path() : options.data_root);
    const fs::path full = fs::weakly_canonical(root / relative);
    auto [r, f] = std::mismatch(root.begin(), root.end(), full.begin(), full.end());
    if (r != root.end()) throw ContractError("path '" + relative + "' is outside the data root");
    return full;
  }

  std::string fresh_id() {
    for (;;) {
      std::string id = "s" + std::to_string(next_id++);
      std::shared_lock lock(map_mu);
      if (!sessions.count(id)) return id;
    }
  }

  void load_existing() {
    namespace fs = std::filesystem;
    if (options.session_dir.empty()) return;
    fs::create_directories(options.session_dir);
    for (const auto& f : fs::directory_iterator(options.session_dir)) {
      if (f.path().extension() != ".json") continue;
      auto s = load_session(f.path());
      auto id = s.id();
      sessions.emplace(std::move(id), std::make_shared<Entry>(std::move(s)));
    }
  }

  void routes();
};

void AnnotationServer::Impl::routes() {
  http.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (!options.token) return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") == "Bearer " + *options.token) {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    send_error(res, 401, "missing or wrong bearer token");
    return httplib::Server::HandlerResponse::Handled;
  });

  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const ContractError& e) {
      send_error(res, 409, e.what());
    } catch (const ConfigError& e) {
      send_error(res, 400, e.what());
    } catch (const IngestError& e) {
      send_error(res, 400, e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  http.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
    std::vector<std::shared_ptr<Entry>> entries;
    {
      std::shared_lock lock(map_mu);
      for (const auto& [_, e] : sessions) entries.push_back(e);
    }
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : entries) {
      std::shared_lock lock(e->mu);
      out.push_back(summary(e->session));
    }
    send_json(res, 200, out);
  });

  http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const auto pred_path = resolve(body.at("predictions_file").get<std::string>());
    const auto corpus_path = resolve(body.at("corpus_file").get<std::string>());
    const SamplingPolicy policy = sampling_policy_from_json(body.value("policy", nlohmann::json::object()));

    std::ifstream pin(pred_path);
    if (!pin) throw IngestError("cannot open " + pred_path.filename().string());
    const PredictionSet predictions = read_predictions_jsonl(pin);
    const IngestResult corpus = ingest_file(corpus_path);

    const std::string id = body.contains("session_id") ? body["session_id"].get<std::string>() : fresh_id();
    AnnotationSession s = build_session(predictions, corpus.corpus, policy, id);
    if (auto sub = body.find("second_annotator"); sub != body.end()) {
      s.assign_subset(sub->at("annotator").get<std::string>(), sub->at("items").get<std::size_t>(),
                      sub->value("seed", policy.seed));
    }
    const std::size_t n = s.items().size();
    insert(std::move(s));
    send_json(res, 201, {{"session_id", id}, {"items", n}});
  });

  http.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto e = find(req.matches[1]);
    if (!e) return send_error(res, 404, "no such session");
    std::shared_lock lock(e->mu);
    send_json(res, 200, summary(e->session));
  });

  http.Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    auto e = find(req.matches[1]);
    if (!e) return send_error(res, 404, "no such session");
    const std::string annotator = req.get_param_value("annotator");
    if (annotator.empty()) return send_error(res, 400, "annotator is required");
    std::shared_lock lock(e->mu);
    const SessionItem* item = e->session.next_for(annotator);
    if (item == nullptr) {
      res.status = 204;
      return;
    }
    const auto p = e->session.progress(annotator);
    send_json(res, 200,
              {{"post_id", item->post_id},
               {"text", item->text},
               {"progress", {{"assigned", p.assigned}, {"labeled", p.labeled}, {"skipped", p.skipped}}}});
  });

  auto write_route = [this](bool is_label) {
    return [this, is_label](const httplib::Request& req, httplib::Response& res) {
      auto e = find(req.matches[1]);
      if (!e) return send_error(res, 404, "no such session");
      const auto body = nlohmann::json::parse(req.body);
      const std::string post_id = body.at("post_id").get<std::string>();
      const std::string annotator = body.at("annotator").get<std::string>();
      if (annotator.empty()) return send_error(res, 400, "annotator is required");
      std::optional<Label> label;
      if (is_label) {
        const std::string text = body.at("label").get<std::string>();
        label = parse_label(text);
        if (!label || !is_semantic(*label)) {
          return send_error(res, 400, "label must be opioid-related, not-opioid-related or unsure");
        }
      }
      std::unique_lock lock(e->mu);
      if (!e->session.contains(post_id)) return send_error(res, 404, "post is not in this session");
      AnnotationSession next = e->session;
      if (label) next.record_label(post_id, annotator, *label);
      else next.record_skip(post_id, annotator);
      persist(next);
      e->session = std::move(next);
      send_json(res, 200,
                {{"post_id", post_id},
                 {"annotator", annotator},
                 {"status", to_string(e->session.status(post_id, annotator))},
                 {"history", e->session.audit(post_id, annotator).size()}});
    };
  };
  http.Post(R"(/sessions/([^/]+)/labels)", write_route(true));
  http.Post(R"(/sessions/([^/]+)/skips)", write_route(false));

  http.Get(R"(/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    auto e = find(req.matches[1]);
    if (!e) return send_error(res, 404, "no such session");
    const std::string annotator = req.get_param_value("annotator");
    std::shared_lock lock(e->mu);
    GoldSet gold = e->session.responses_of(annotator);
    if (gold.empty()) return send_error(res, 404, "annotator has no labels in this session");
    std::ostringstream csv;
    write_gold_csv(csv, gold);
    res.status = 200;
    res.set_content(csv.str(), "text/csv");
  });

  http.Get(R"(/sessions/([^/]+)/agreement)", [this](const httplib::Request& req, httplib::Response& res) {
    auto e = find(req.matches[1]);
    if (!e) return send_error(res, 404, "no such session");
    const std::string a = req.get_param_value("a");
    const std::string b = req.get_param_value("b");
    if (a.empty() || b.empty()) return send_error(res, 400, "parameters a and b are required");
    GoldSet ga, gb;
    {
      std::shared_lock lock(e->mu);
      ga = e->session.responses_of(a);
      gb = e->session.responses_of(b);
    }
    send_json(res, 200, to_json(agreement(ga, gb)));
  });

  if (options.static_dir) http.set_mount_point("/", options.static_dir->string());
}

AnnotationServer::AnnotationServer(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->load_existing();
  impl_->routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

void AnnotationServer::add_session(AnnotationSession session) { impl_->insert(std::move(session)); }

std::optional<AnnotationSession> AnnotationServer::snapshot(const std::string& id) const {
  auto e = impl_->find(id);
  if (!e) return std::nullopt;
  std::shared_lock lock(e->mu);
  return e->session;
}

int AnnotationServer::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

void AnnotationServer::listen(const std::string& host, int port) {
  if (!impl_->http.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace slangscan
