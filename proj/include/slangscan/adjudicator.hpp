#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slangscan/corpus.hpp"
#include "slangscan/prediction.hpp"
#include "slangscan/prompt.hpp"
#include "slangscan/provider.hpp"

namespace slangscan {

/// One attempt at the two-turn conversation for a batch, kept verbatim.
struct PromptTranscript {
  std::string id;
  std::vector<std::string> batch;  // post ids, same order as rendered_turn1
  std::string rendered_turn1;
  std::string reasoning_reply;
  std::string rendered_turn2;
  std::string answer_reply;
  /// Earlier turn-2 replies on this conversation that failed to parse.
  std::vector<std::string> rejected_answers;
  std::string provider_id;
  /// "ok", "content-refused", "transport-error" or "parse-error".
  std::string status;
  std::string error;
  unsigned attempt = 1;
  unsigned turn2_asks = 0;
  double turn1_ms = 0;
  double turn2_ms = 0;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

nlohmann::json to_json(const PromptTranscript& t);
PromptTranscript transcript_from_json(const nlohmann::json& j);

struct AdjudicationOptions {
  std::size_t batch_size = 10;
  /// Posts already labeled here are skipped and carried into the result.
  const PredictionSet* prior = nullptr;
  /// Defaults to the provider id.
  std::string predictor_id;
  std::string transcript_prefix = "tx";
  /// Called (serialized) for every transcript as soon as it exists.
  std::function<void(const PromptTranscript&)> on_transcript;
  /// Called (serialized) for every new prediction as its batch completes.
  std::function<void(const Prediction&)> on_prediction;
};

struct AdjudicationStats {
  std::size_t batches = 0;
  std::size_t requests = 0;
  std::size_t turn2_reasks = 0;
  std::size_t transcript_retries = 0;
  std::size_t transport_retries = 0;
  std::size_t batch_splits = 0;
  std::size_t skipped_prior = 0;
  std::size_t content_refusals = 0;
  std::size_t api_errors = 0;
  std::vector<std::string> notes;

  std::size_t retries() const noexcept {
    return turn2_reasks + transcript_retries + transport_retries;
  }
};

struct AdjudicationResult {
  PredictionSet predictions;
  AdjudicationStats stats;
  std::vector<PromptTranscript> transcripts;
};

/// Runs the two-turn scheme over a corpus in batches.
///
/// Retry ladder per batch: transport failures are retried with backoff up to
/// the configured attempts; an unparseable answer gets one re-ask of turn 2
/// on the same conversation, then one fresh transcript. A batch that is
/// refused or still failing is split and each post retried alone, so errors
/// land only on the posts that cause them: a refusal becomes
/// ContentRestrictionError, anything else ApiError. Individual failures never
/// abort the run.
class Adjudicator {
 public:
  Adjudicator(CompletionProvider& provider, ProviderConfig config, PromptScheme scheme,
              Clock& clock = system_clock());

  AdjudicationResult run(const Corpus& corpus, const AdjudicationOptions& options = {});

 private:
  CompletionProvider& provider_;
  ProviderConfig config_;
  PromptScheme scheme_;
  Clock& clock_;
};

AdjudicationResult adjudicate(const Corpus& corpus, CompletionProvider& provider,
                              const ProviderConfig& config, const PromptScheme& scheme,
                              const AdjudicationOptions& options = {},
                              Clock& clock = system_clock());

/// Error labels become NotOpioidRelated with the original kept as shadow.
PredictionSet resolve_errors(const PredictionSet& predictions);

}  // namespace slangscan
