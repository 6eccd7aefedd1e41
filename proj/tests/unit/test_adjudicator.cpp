#include <gtest/gtest.h>

#include <cstdlib>
#include <map>

#include "../support/fixtures.hpp"
#include "slangscan/adjudicator.hpp"
#include "slangscan/error.hpp"
#include "slangscan/mock_provider.hpp"

using namespace slangscan;

namespace {

ProviderConfig fast_config(unsigned concurrency = 1, unsigned rpm = 100000) {
  ProviderConfig c;
  c.max_concurrent = concurrency;
  c.requests_per_minute = rpm;
  c.retry.initial_backoff = std::chrono::milliseconds(10);
  return c;
}

Corpus small_corpus() {
  return Corpus({Post{"1", "that fenty had me nodding off"}, Post{"2", "fenty palette restock"},
                 Post{"3", "idk about fenty"}, Post{"4", "random words"}, Post{"5", "more nodding off"}},
                Provenance{"t", "2026-01-01T00:00:00Z", {}});
}

std::map<std::string, Label> as_map(const PredictionSet& p) {
  std::map<std::string, Label> m;
  for (const auto& e : p.entries()) m[e.post_id] = e.label;
  return m;
}

}  // namespace

TEST(Adjudicator, FollowsMockScriptExactly) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  auto r = adjudicate(small_corpus(), mock, fast_config(), default_scheme(), {.batch_size = 2}, clock);
  ASSERT_EQ(r.predictions.size(), 5u);
  const std::vector<Label> want{Label::OpioidRelated, Label::NotOpioidRelated, Label::Unsure,
                                Label::NotOpioidRelated, Label::OpioidRelated};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.predictions.entries()[i].label, want[i]);
  EXPECT_EQ(r.stats.batches, 3u);
  EXPECT_EQ(r.stats.requests, 6u);  // two turns per batch
  EXPECT_EQ(r.stats.retries(), 0u);
  EXPECT_EQ(r.transcripts.size(), 3u);
  EXPECT_EQ(r.predictions.predictor_id(), "mock");
  for (const auto& tx : r.transcripts) {
    EXPECT_EQ(tx.status, "ok");
    EXPECT_FALSE(tx.reasoning_reply.empty());
  }
}

TEST(Adjudicator, RefusalIsIsolatedToItsPost) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  Corpus c({Post{"a", "nodding off"}, Post{"b", "he overdosed"}, Post{"c", "palette"}}, {});
  auto r = adjudicate(c, mock, fast_config(), default_scheme(), {.batch_size = 3}, clock);
  auto m = as_map(r.predictions);
  EXPECT_EQ(m["a"], Label::OpioidRelated);
  EXPECT_EQ(m["b"], Label::ContentRestrictionError);
  EXPECT_EQ(m["c"], Label::NotOpioidRelated);
  EXPECT_EQ(r.stats.batch_splits, 1u);
  EXPECT_EQ(r.stats.content_refusals, 1u);
}

TEST(Adjudicator, MalformedAnswerReaskedOnce) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  mock.inject_malformed_answers(1);
  auto r = adjudicate(small_corpus(), mock, fast_config(), default_scheme(), {.batch_size = 10}, clock);
  EXPECT_EQ(r.stats.retries(), 1u);
  EXPECT_EQ(r.stats.turn2_reasks, 1u);
  ASSERT_EQ(r.transcripts.size(), 1u);
  EXPECT_EQ(r.transcripts[0].rejected_answers.size(), 1u);
  EXPECT_EQ(r.transcripts[0].turn2_asks, 2u);
  EXPECT_EQ(as_map(r.predictions)["1"], Label::OpioidRelated);
}

TEST(Adjudicator, PersistentlyMalformedBecomesApiError) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  mock.inject_malformed_answers(100);
  Corpus c({Post{"a", "nodding off"}}, {});
  auto r = adjudicate(c, mock, fast_config(), default_scheme(), {}, clock);
  EXPECT_EQ(r.predictions.entries()[0].label, Label::ApiError);
  EXPECT_EQ(r.stats.transcript_retries, 1u);
  EXPECT_EQ(r.stats.turn2_reasks, 2u);
  EXPECT_EQ(r.stats.api_errors, 1u);
}

TEST(Adjudicator, TransportErrorsRetriedWithBackoff) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  mock.inject_transport_errors(2);
  auto cfg = fast_config();
  cfg.retry.max_attempts = 3;
  const auto t0 = clock.now();
  auto r = adjudicate(small_corpus(), mock, cfg, default_scheme(), {.batch_size = 10}, clock);
  EXPECT_EQ(r.stats.transport_retries, 2u);
  EXPECT_EQ(as_map(r.predictions)["2"], Label::NotOpioidRelated);
  // Backoff 10 ms then 20 ms on the virtual clock.
  EXPECT_GE(clock.now() - t0, std::chrono::milliseconds(30));
}

TEST(Adjudicator, TransportExhaustionBecomesApiError) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  mock.inject_transport_errors(1000);
  Corpus c({Post{"a", "x"}, Post{"b", "y"}}, {});
  auto r = adjudicate(c, mock, fast_config(), default_scheme(), {.batch_size = 2}, clock);
  for (const auto& p : r.predictions.entries()) EXPECT_EQ(p.label, Label::ApiError);
  EXPECT_EQ(r.predictions.size(), 2u);
}

TEST(Adjudicator, ResumeSkipsPriorAndMatchesFullRun) {
  ManualClock clock;
  MockProvider full_mock(fixtures::cue_script());
  const Corpus corpus = small_corpus();
  auto full = adjudicate(corpus, full_mock, fast_config(), default_scheme(), {.batch_size = 2}, clock);

  PredictionSet partial(full.predictions.predictor_id());
  for (std::size_t i = 0; i < 3; ++i) partial.set(full.predictions.entries()[i]);
  MockProvider resume_mock(fixtures::cue_script());
  auto resumed = adjudicate(corpus, resume_mock, fast_config(), default_scheme(),
                            {.batch_size = 2, .prior = &partial}, clock);
  EXPECT_EQ(resumed.stats.skipped_prior, 3u);
  EXPECT_EQ(resume_mock.request_count(), 2u);
  ASSERT_EQ(resumed.predictions.size(), full.predictions.size());
  for (std::size_t i = 0; i < full.predictions.size(); ++i) {
    EXPECT_EQ(resumed.predictions.entries()[i].post_id, full.predictions.entries()[i].post_id);
    EXPECT_EQ(resumed.predictions.entries()[i].label, full.predictions.entries()[i].label);
  }
}

TEST(Adjudicator, LabelsIndependentOfBatchOrder) {
  auto fx = fixtures::spritzer_fenty(0, false, 3);
  std::vector<Post> reversed(fx.corpus.begin(), fx.corpus.end());
  std::reverse(reversed.begin(), reversed.end());
  Corpus rev(std::move(reversed), {});
  ManualClock clock;
  MockProvider m1(fixtures::cue_script()), m2(fixtures::cue_script());
  auto a = adjudicate(fx.corpus, m1, fast_config(4), default_scheme(), {.batch_size = 7}, clock);
  auto b = adjudicate(rev, m2, fast_config(3), default_scheme(), {.batch_size = 10}, clock);
  EXPECT_EQ(as_map(a.predictions), as_map(b.predictions));
  // Output follows corpus order regardless of worker scheduling.
  for (std::size_t i = 0; i < fx.corpus.size(); ++i) EXPECT_EQ(a.predictions.entries()[i].post_id, fx.corpus[i].id);
}

TEST(Adjudicator, EveryPostGetsExactlyOneLabel) {
  auto fx = fixtures::spritzer_fenty(0, true, 5);
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  mock.inject_transport_errors(3);
  mock.inject_malformed_answers(2);
  auto r = adjudicate(fx.corpus, mock, fast_config(4), default_scheme(), {.batch_size = 10}, clock);
  ASSERT_EQ(r.predictions.size(), fx.corpus.size());
  for (const auto& post : fx.corpus) EXPECT_NE(r.predictions.find(post.id), nullptr);
}

TEST(Adjudicator, RespectsRequestsPerMinute) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  std::vector<Post> posts;
  for (int i = 0; i < 40; ++i) posts.push_back(Post{std::to_string(i), "nodding off"});
  Corpus c(std::move(posts), {});
  auto r = adjudicate(c, mock, fast_config(4, 7), default_scheme(), {.batch_size = 1}, clock);
  auto log = mock.log();
  ASSERT_EQ(log.size(), 80u);
  std::vector<Clock::time_point> times;
  for (const auto& rec : log) times.push_back(rec.dispatched_at);
  std::sort(times.begin(), times.end());
  for (std::size_t i = 0; i + 7 < times.size(); ++i) {
    EXPECT_GE(times[i + 7] - times[i], std::chrono::seconds(60)) << "window starting at request " << i;
  }
}

TEST(Adjudicator, TemperatureOmittedWhenUnsupported) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  mock.set_accepts_temperature(false);
  auto r = adjudicate(small_corpus(), mock, fast_config(), default_scheme(), {}, clock);
  for (const auto& rec : mock.log()) EXPECT_FALSE(rec.temperature.has_value());
  ASSERT_FALSE(r.stats.notes.empty());

  MockProvider normal(fixtures::cue_script());
  adjudicate(small_corpus(), normal, fast_config(), default_scheme(), {}, clock);
  for (const auto& rec : normal.log()) EXPECT_EQ(rec.temperature, 0.0);
}

TEST(Adjudicator, CallbacksSeeEveryPredictionAndTranscript) {
  ManualClock clock;
  MockProvider mock(fixtures::cue_script());
  std::size_t preds = 0, txs = 0;
  AdjudicationOptions opts;
  opts.batch_size = 2;
  opts.on_prediction = [&](const Prediction&) { ++preds; };
  opts.on_transcript = [&](const PromptTranscript&) { ++txs; };
  auto r = adjudicate(small_corpus(), mock, fast_config(2), default_scheme(), opts, clock);
  EXPECT_EQ(preds, 5u);
  EXPECT_EQ(txs, r.transcripts.size());
}

TEST(Adjudicator, TranscriptJsonRoundTrip) {
  PromptTranscript t;
  t.id = "tx-1";
  t.batch = {"a", "b"};
  t.rendered_turn1 = "turn one";
  t.reasoning_reply = "because";
  t.rendered_turn2 = "turn two";
  t.answer_reply = "yes, no";
  t.rejected_answers = {"garbage"};
  t.provider_id = "mock";
  t.status = "ok";
  t.attempt = 2;
  t.turn2_asks = 2;
  const PromptTranscript back = transcript_from_json(to_json(t));
  EXPECT_EQ(to_json(back), to_json(t));
}

TEST(Adjudicator, ResolveErrorsKeepsShadow) {
  PredictionSet p("x");
  p.set(Prediction{"1", Label::ContentRestrictionError, std::nullopt, std::nullopt});
  p.set(Prediction{"2", Label::OpioidRelated, std::nullopt, std::nullopt});
  auto r = resolve_errors(p);
  EXPECT_EQ(r.entries()[0].label, Label::NotOpioidRelated);
  EXPECT_EQ(r.entries()[0].shadow, Label::ContentRestrictionError);
  EXPECT_EQ(r.entries()[0].reported(), Label::ContentRestrictionError);
  EXPECT_FALSE(r.entries()[1].shadow.has_value());
}

TEST(ProviderConfig, MissingCredentialsFailFast) {
  ProviderConfig c;
  c.kind = "openai-compatible";
  c.endpoint = "http://127.0.0.1:9";
  c.model = "m";
  c.api_key_env = "SLANGSCAN_TEST_KEY_THAT_IS_UNSET";
  ::unsetenv(c.api_key_env.c_str());
  EXPECT_THROW(make_provider(c), ConfigError);
  ::setenv(c.api_key_env.c_str(), "", 1);
  EXPECT_THROW(make_provider(c), ConfigError);
  ::setenv(c.api_key_env.c_str(), "sk-test", 1);
  EXPECT_NO_THROW(make_provider(c));
  ::unsetenv(c.api_key_env.c_str());
}

TEST(ProviderConfig, ValidationAndSerializationWithoutSecrets) {
  ProviderConfig c;
  c.max_concurrent = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c.max_concurrent = 2;
  c.requests_per_minute = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c.requests_per_minute = 30;
  c.kind = "openai-compatible";
  c.api_key_env = "MY_KEY";
  c.model = "gpt";
  c.endpoint = "https://example.invalid";
  EXPECT_NO_THROW(validate(c));
  ::setenv("MY_KEY", "sk-secret-value", 1);
  nlohmann::json j = c;
  EXPECT_EQ(j.dump().find("sk-secret-value"), std::string::npos);
  EXPECT_EQ(j.get<ProviderConfig>().api_key_env, "MY_KEY");
  ::unsetenv("MY_KEY");
}

TEST(RateLimiter, WindowOnManualClock) {
  ManualClock clock;
  RateLimiter lim(3, clock);
  const auto t0 = clock.now();
  std::vector<Clock::time_point> slots;
  for (int i = 0; i < 7; ++i) slots.push_back(lim.acquire());
  EXPECT_EQ(slots[2], t0);
  EXPECT_EQ(slots[3], t0 + std::chrono::seconds(60));
  EXPECT_EQ(slots[6], t0 + std::chrono::seconds(120));
}

TEST(MockScript, FromJson) {
  auto s = mock_script_from_json(nlohmann::json::parse(
      R"({"rules":[{"contains":"Fentanyl","answer":"yes"}],"fallback":"unsure","refuse_if_contains":["gore"]})"));
  MockProvider m(s);
  EXPECT_EQ(m.label_for("FENTANYL again"), Label::OpioidRelated);
  EXPECT_EQ(m.label_for("nothing"), Label::Unsure);
  EXPECT_THROW(mock_script_from_json(nlohmann::json::parse(R"({"fallback":"perhaps"})")), ConfigError);
}
