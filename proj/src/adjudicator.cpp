#include "slangscan/adjudicator.hpp"

#include <atomic>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "slangscan/error.hpp"

namespace slangscan {

nlohmann::json to_json(const PromptTranscript& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["batch"] = t.batch;
  j["rendered_turn1"] = t.rendered_turn1;
  j["reasoning_reply"] = t.reasoning_reply;
  j["rendered_turn2"] = t.rendered_turn2;
  j["answer_reply"] = t.answer_reply;
  j["rejected_answers"] = t.rejected_answers;
  j["provider_id"] = t.provider_id;
  j["status"] = t.status;
  j["error"] = t.error;
  j["attempt"] = t.attempt;
  j["turn2_asks"] = t.turn2_asks;
  j["turn1_ms"] = t.turn1_ms;
  j["turn2_ms"] = t.turn2_ms;
  j["prompt_tokens"] = t.prompt_tokens;
  j["completion_tokens"] = t.completion_tokens;
  return nlohmann::json(j);
}

PromptTranscript transcript_from_json(const nlohmann::json& j) {
  PromptTranscript t;
  t.id = j.value("id", std::string{});
  t.batch = j.value("batch", std::vector<std::string>{});
  t.rendered_turn1 = j.value("rendered_turn1", std::string{});
  t.reasoning_reply = j.value("reasoning_reply", std::string{});
  t.rendered_turn2 = j.value("rendered_turn2", std::string{});
  t.answer_reply = j.value("answer_reply", std::string{});
  t.rejected_answers = j.value("rejected_answers", std::vector<std::string>{});
  t.provider_id = j.value("provider_id", std::string{});
  t.status = j.value("status", std::string{});
  t.error = j.value("error", std::string{});
  t.attempt = j.value("attempt", 1u);
  t.turn2_asks = j.value("turn2_asks", 0u);
  t.turn1_ms = j.value("turn1_ms", 0.0);
  t.turn2_ms = j.value("turn2_ms", 0.0);
  t.prompt_tokens = j.value("prompt_tokens", std::size_t{0});
  t.completion_tokens = j.value("completion_tokens", std::size_t{0});
  return t;
}

namespace {

enum class Outcome { Labeled, Refused, Failed };

struct BatchResult {
  Outcome outcome = Outcome::Failed;
  std::vector<Label> labels;
  std::string transcript_id;
};

// Per-worker state; merged into the run result under a lock.
struct WorkerStats {
  std::size_t requests = 0;
  std::size_t turn2_reasks = 0;
  std::size_t transcript_retries = 0;
  std::size_t transport_retries = 0;
  std::size_t batch_splits = 0;
};

class BatchRunner {
 public:
  BatchRunner(CompletionProvider& provider, const ProviderConfig& config, const PromptScheme& scheme,
              Clock& clock, RateLimiter& limiter, std::optional<double> temperature,
              std::function<std::string()> next_transcript_id,
              std::function<void(PromptTranscript)> emit)
      : provider_(provider),
        config_(config),
        scheme_(scheme),
        clock_(clock),
        limiter_(limiter),
        temperature_(temperature),
        next_id_(std::move(next_transcript_id)),
        emit_(std::move(emit)) {}

  // Labels for each post of the batch, splitting on failure.
  std::vector<std::pair<Label, std::string>> run(std::span<const Post> posts, WorkerStats& stats) {
    std::vector<std::pair<Label, std::string>> out;
    BatchResult r = attempt(posts, stats);
    if (r.outcome == Outcome::Labeled) {
      for (Label l : r.labels) out.emplace_back(l, r.transcript_id);
      return out;
    }
    if (posts.size() > 1) {
      ++stats.batch_splits;
      for (std::size_t i = 0; i < posts.size(); ++i) {
        auto single = run(posts.subspan(i, 1), stats);
        out.push_back(single.front());
      }
      return out;
    }
    out.emplace_back(r.outcome == Outcome::Refused ? Label::ContentRestrictionError : Label::ApiError,
                     r.transcript_id);
    return out;
  }

 private:
  struct Sent {
    CompletionResponse response;
    double ms = 0;
  };

  Sent send(std::vector<ChatMessage> messages, WorkerStats& stats) {
    CompletionRequest req{std::move(messages), temperature_, {}};
    Sent sent;
    for (unsigned attempt = 1;; ++attempt) {
      req.dispatched_at = limiter_.acquire();
      ++stats.requests;
      const auto t0 = std::chrono::steady_clock::now();
      sent.response = provider_.complete(req);
      sent.ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (sent.response.status != CompletionStatus::TransportError || attempt >= config_.retry.max_attempts) {
        return sent;
      }
      ++stats.transport_retries;
      clock_.sleep_for(config_.retry.backoff_for(attempt));
    }
  }

  BatchResult attempt(std::span<const Post> posts, WorkerStats& stats) {
    std::vector<std::string> ids;
    for (const auto& p : posts) ids.push_back(p.id);
    const std::string turn1 = render_turn1(posts, scheme_);

    BatchResult result;
    constexpr unsigned kTranscriptAttempts = 2;
    constexpr unsigned kTurn2Asks = 2;
    for (unsigned t = 1; t <= kTranscriptAttempts; ++t) {
      if (t > 1) ++stats.transcript_retries;
      PromptTranscript tx;
      tx.id = next_id_();
      tx.batch = ids;
      tx.rendered_turn1 = turn1;
      tx.rendered_turn2 = scheme_.turn2;
      tx.provider_id = provider_.id();
      tx.attempt = t;
      result.transcript_id = tx.id;

      std::vector<ChatMessage> conversation{{Role::System, scheme_.context}, {Role::User, turn1}};
      Sent first = send(conversation, stats);
      tx.turn1_ms = first.ms;
      tx.prompt_tokens += first.response.prompt_tokens;
      tx.completion_tokens += first.response.completion_tokens;
      if (first.response.status != CompletionStatus::Ok) {
        const bool refused = first.response.status == CompletionStatus::ContentRefused;
        tx.status = refused ? "content-refused" : "transport-error";
        tx.error = first.response.error;
        emit_(std::move(tx));
        result.outcome = refused ? Outcome::Refused : Outcome::Failed;
        return result;
      }
      tx.reasoning_reply = first.response.content;
      conversation.push_back({Role::Assistant, first.response.content});
      conversation.push_back({Role::User, scheme_.turn2});

      for (unsigned ask = 1; ask <= kTurn2Asks; ++ask) {
        if (ask > 1) ++stats.turn2_reasks;
        ++tx.turn2_asks;
        Sent second = send(conversation, stats);
        tx.turn2_ms += second.ms;
        tx.prompt_tokens += second.response.prompt_tokens;
        tx.completion_tokens += second.response.completion_tokens;
        if (second.response.status != CompletionStatus::Ok) {
          const bool refused = second.response.status == CompletionStatus::ContentRefused;
          tx.status = refused ? "content-refused" : "transport-error";
          tx.error = second.response.error;
          emit_(std::move(tx));
          result.outcome = refused ? Outcome::Refused : Outcome::Failed;
          return result;
        }
        tx.answer_reply = second.response.content;
        try {
          result.labels = parse_answers(second.response.content, posts.size(), scheme_.answer_vocabulary);
          tx.status = "ok";
          tx.error.clear();
          emit_(std::move(tx));
          result.outcome = Outcome::Labeled;
          return result;
        } catch (const AnswerParseError& e) {
          tx.status = "parse-error";
          tx.error = e.what();
          if (ask < kTurn2Asks) tx.rejected_answers.push_back(std::move(tx.answer_reply));
        }
      }
      emit_(std::move(tx));
    }
    result.outcome = Outcome::Failed;
    return result;
  }

  CompletionProvider& provider_;
  const ProviderConfig& config_;
  const PromptScheme& scheme_;
  Clock& clock_;
  RateLimiter& limiter_;
  std::optional<double> temperature_;
  std::function<std::string()> next_id_;
  std::function<void(PromptTranscript)> emit_;
};

}  // namespace

Adjudicator::Adjudicator(CompletionProvider& provider, ProviderConfig config, PromptScheme scheme,
                         Clock& clock)
    : provider_(provider), config_(std::move(config)), scheme_(std::move(scheme)), clock_(clock) {
  validate(config_);
  validate(scheme_);
}

AdjudicationResult Adjudicator::run(const Corpus& corpus, const AdjudicationOptions& options) {
  if (options.batch_size < 1) throw ContractError("batch_size must be >= 1");

  AdjudicationResult result;
  result.predictions.set_predictor_id(options.predictor_id.empty() ? provider_.id() : options.predictor_id);
  auto& stats = result.stats;

  std::optional<double> temperature = scheme_.temperature;
  if (!config_.send_temperature || !provider_.accepts_temperature()) {
    temperature.reset();
    stats.notes.push_back("provider " + provider_.id() + " does not accept a temperature; parameter omitted");
  }

  // Carry prior labels forward and collect the posts still to do.
  std::vector<Post> pending;
  for (const auto& post : corpus) {
    const Prediction* prior = options.prior ? options.prior->find(post.id) : nullptr;
    if (prior != nullptr) {
      ++stats.skipped_prior;
    } else {
      pending.push_back(post);
    }
  }

  std::vector<std::span<const Post>> batches;
  for (std::size_t lo = 0; lo < pending.size(); lo += options.batch_size) {
    batches.push_back(std::span<const Post>(pending).subspan(lo, std::min(options.batch_size, pending.size() - lo)));
  }
  stats.batches = batches.size();

  RateLimiter limiter(config_.requests_per_minute, clock_);
  std::mutex mu;  // guards transcripts, callbacks, stats merge and the id counter
  std::size_t transcript_seq = 0;
  auto next_id = [&] {
    std::lock_guard lock(mu);
    return options.transcript_prefix + "-" + std::to_string(++transcript_seq);
  };
  auto emit = [&](PromptTranscript tx) {
    std::lock_guard lock(mu);
    if (options.on_transcript) options.on_transcript(tx);
    result.transcripts.push_back(std::move(tx));
  };

  std::vector<std::vector<std::pair<Label, std::string>>> labels(batches.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    WorkerStats local;
    BatchRunner runner(provider_, config_, scheme_, clock_, limiter, temperature, next_id, emit);
    for (std::size_t b = cursor++; b < batches.size(); b = cursor++) {
      labels[b] = runner.run(batches[b], local);
      if (options.on_prediction) {
        std::lock_guard lock(mu);
        for (std::size_t i = 0; i < batches[b].size(); ++i) {
          options.on_prediction(Prediction{batches[b][i].id, labels[b][i].first, std::nullopt, labels[b][i].second});
        }
      }
    }
    std::lock_guard lock(mu);
    stats.requests += local.requests;
    stats.turn2_reasks += local.turn2_reasks;
    stats.transcript_retries += local.transcript_retries;
    stats.transport_retries += local.transport_retries;
    stats.batch_splits += local.batch_splits;
  };

  const std::size_t workers = std::min<std::size_t>(config_.max_concurrent, std::max<std::size_t>(1, batches.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  }

  // Single-writer assembly in corpus order.
  std::unordered_map<std::string_view, const std::pair<Label, std::string>*> fresh;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    for (std::size_t i = 0; i < batches[b].size(); ++i) fresh.emplace(batches[b][i].id, &labels[b][i]);
  }
  for (const auto& post : corpus) {
    if (auto it = fresh.find(post.id); it != fresh.end()) {
      const auto& [label, tx] = *it->second;
      if (label == Label::ContentRestrictionError) ++stats.content_refusals;
      if (label == Label::ApiError) ++stats.api_errors;
      result.predictions.set(Prediction{post.id, label, std::nullopt, tx});
    } else {
      result.predictions.set(*options.prior->find(post.id));
    }
  }
  return result;
}

AdjudicationResult adjudicate(const Corpus& corpus, CompletionProvider& provider, const ProviderConfig& config,
                              const PromptScheme& scheme, const AdjudicationOptions& options, Clock& clock) {
  return Adjudicator(provider, config, scheme, clock).run(corpus, options);
}

PredictionSet resolve_errors(const PredictionSet& predictions) {
  PredictionSet out(predictions.predictor_id());
  for (Prediction p : predictions.entries()) {
    if (is_error(p.label)) {
      p.shadow = p.label;
      p.label = Label::NotOpioidRelated;
    }
    out.set(std::move(p));
  }
  return out;
}

}  // namespace slangscan
