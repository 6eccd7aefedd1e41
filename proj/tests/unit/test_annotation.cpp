#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "../support/fixtures.hpp"
#include "slangscan/annotation.hpp"
#include "slangscan/annotation_server.hpp"
#include "slangscan/error.hpp"

using namespace slangscan;
namespace fs = std::filesystem;

namespace {

SamplingPolicy fraction(double f, std::uint64_t seed = 1) {
  SamplingPolicy p;
  p.negative_fraction = f;
  p.seed = seed;
  return p;
}

AnnotationSession twenty_items() {
  auto fx = fixtures::prediction_counts(2, 2, 1, 0, 15);
  SamplingPolicy p = fraction(1.0);
  return build_session(fx.predictions, fx.corpus, p, "t20");
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("slangscan-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Sampling, PolicyValidation) {
  SamplingPolicy p;
  EXPECT_THROW(p.validate(), ConfigError);
  p.negative_fraction = 0.5;
  p.negative_count = 3;
  EXPECT_THROW(p.validate(), ConfigError);
  p.negative_count.reset();
  p.negative_fraction = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_EQ(fraction(0.5).sample_size(3), 2u);  // 1.5 rounds up
  EXPECT_EQ(fraction(0.0225).sample_size(57052), 1284u);
  SamplingPolicy c;
  c.negative_count = 10;
  EXPECT_THROW(c.sample_size(9), ContractError);
}

TEST(Sampling, TakesAllPositivesAndSamplesNegatives) {
  auto fx = fixtures::prediction_counts(5, 4, 3, 2, 200);
  auto s = build_session(fx.predictions, fx.corpus, fraction(0.1, 9));
  EXPECT_EQ(s.items().size(), 5u + 4 + 3 + 2 + 20);
  std::size_t non_negative = 0;
  for (const auto& it : s.items()) {
    non_negative += fx.predictions.find(it.post_id)->label != Label::NotOpioidRelated;
  }
  EXPECT_EQ(non_negative, 14u);
}

TEST(Sampling, FullFractionIsShuffledWholeCorpus) {
  auto fx = fixtures::prediction_counts(3, 3, 0, 0, 30);
  SamplingPolicy p = fraction(1.0, 4);
  p.take_all_of = {Label::OpioidRelated, Label::NotOpioidRelated, Label::Unsure, Label::ContentRestrictionError,
                   Label::ApiError};
  auto s = build_session(fx.predictions, fx.corpus, p);
  std::multiset<std::string> got, want;
  for (const auto& it : s.items()) got.insert(it.post_id);
  for (const auto& post : fx.corpus) want.insert(post.id);
  EXPECT_EQ(got, want);
  bool same_order = true;
  for (std::size_t i = 0; i < s.items().size(); ++i) same_order &= s.items()[i].post_id == fx.corpus[i].id;
  EXPECT_FALSE(same_order);
}

TEST(Sampling, SeedReproducible) {
  auto fx = fixtures::prediction_counts(10, 10, 0, 0, 500);
  auto a = build_session(fx.predictions, fx.corpus, fraction(0.2, 77), "x");
  auto b = build_session(fx.predictions, fx.corpus, fraction(0.2, 77), "x");
  auto c = build_session(fx.predictions, fx.corpus, fraction(0.2, 78), "x");
  ASSERT_EQ(a.items().size(), b.items().size());
  for (std::size_t i = 0; i < a.items().size(); ++i) EXPECT_EQ(a.items()[i].post_id, b.items()[i].post_id);
  EXPECT_EQ(to_json(a)["items"], to_json(b)["items"]);
  EXPECT_NE(to_json(a)["items"], to_json(c)["items"]);
}

TEST(Sampling, ErrorsOnMissingPostOrOversizedCount) {
  auto fx = fixtures::prediction_counts(1, 0, 0, 0, 5);
  SamplingPolicy p;
  p.negative_count = 6;
  EXPECT_THROW(build_session(fx.predictions, fx.corpus, p), ContractError);
  PredictionSet extra = fx.predictions;
  extra.set(Prediction{"ghost", Label::OpioidRelated, std::nullopt, std::nullopt});
  EXPECT_THROW(build_session(extra, fx.corpus, fraction(0.5)), ContractError);
}

TEST(Session, ItemsCarryNoPredictions) {
  auto fx = fixtures::prediction_counts(3, 3, 3, 3, 10);
  auto s = build_session(fx.predictions, fx.corpus, fraction(1.0));
  const std::string doc = to_json(s).dump();
  for (Label l : kAllLabels) {
    // The policy block names labels; items and log must not.
    EXPECT_EQ(to_json(s)["items"].dump().find(std::string(to_string(l))), std::string::npos);
  }
  EXPECT_EQ(doc.find("shadow"), std::string::npos);
  EXPECT_EQ(doc.find("predictor"), std::string::npos);
}

TEST(Session, LabelingLifecycle) {
  auto s = twenty_items();
  const std::string id = s.items()[0].post_id;
  EXPECT_EQ(s.status(id, "A"), ItemStatus::Pending);
  s.record_label(id, "A", Label::OpioidRelated);
  EXPECT_EQ(s.status(id, "A"), ItemStatus::Labeled);
  s.record_label(id, "A", Label::Unsure);
  EXPECT_EQ(s.response(id, "A"), Label::Unsure);
  auto audit = s.audit(id, "A");
  ASSERT_EQ(audit.size(), 2u);
  EXPECT_FALSE(audit[1].note.empty());
  s.record_label(id, "B", Label::NotOpioidRelated);
  EXPECT_EQ(s.response(id, "A"), Label::Unsure);
  EXPECT_EQ(s.response(id, "B"), Label::NotOpioidRelated);
  EXPECT_THROW(s.record_label("nope", "A", Label::Unsure), ContractError);
  EXPECT_THROW(s.record_label(id, "A", Label::ApiError), ContractError);
}

TEST(Session, NextSkipsLabeledAndSkipped) {
  auto s = twenty_items();
  EXPECT_EQ(s.next_for("A")->post_id, s.items()[0].post_id);
  s.record_label(s.items()[0].post_id, "A", Label::Unsure);
  s.record_skip(s.items()[1].post_id, "A");
  EXPECT_EQ(s.next_for("A")->post_id, s.items()[2].post_id);
  EXPECT_EQ(s.next_for("B")->post_id, s.items()[0].post_id);
  for (const auto& it : s.items()) s.record_label(it.post_id, "B", Label::NotOpioidRelated);
  EXPECT_EQ(s.next_for("B"), nullptr);
  auto prog = s.progress("A");
  EXPECT_EQ(prog.labeled, 1u);
  EXPECT_EQ(prog.skipped, 1u);
}

TEST(Session, ExportOmitsPendingAndSkipped) {
  auto s = twenty_items();
  for (std::size_t i = 0; i < 10; ++i) s.record_label(s.items()[i].post_id, "A", Label::Unsure);
  s.record_skip(s.items()[10].post_id, "A");
  auto gold = export_gold(s, "A");
  EXPECT_EQ(gold.size(), 10u);
  std::stringstream csv;
  write_gold_csv(csv, gold);
  EXPECT_EQ(read_gold_csv(csv).size(), 10u);
  EXPECT_THROW(export_gold(s, "nobody"), ContractError);
}

TEST(Session, ExportFeedsEvaluatorConsistently) {
  auto fx = fixtures::prediction_counts(4, 4, 2, 0, 10);
  auto s = build_session(fx.predictions, fx.corpus, fraction(1.0));
  for (std::size_t i = 0; i < 12; ++i) s.record_label(s.items()[i].post_id, "A", kSemanticLabels[i % 3]);
  auto cm = confusion(fx.predictions, export_gold(s, "A"));
  EXPECT_EQ(cm.total(), 12u);
}

TEST(Session, SecondAnnotatorSubset) {
  auto s = twenty_items();
  s.assign_subset("B", 5, 3);
  EXPECT_EQ(s.assigned("B").size(), 5u);
  EXPECT_EQ(s.assigned("A").size(), 20u);
  std::size_t served = 0;
  while (const SessionItem* it = s.next_for("B")) {
    s.record_label(it->post_id, "B", Label::Unsure);
    ++served;
  }
  EXPECT_EQ(served, 5u);
  EXPECT_THROW(s.assign_subset("C", 21, 1), ContractError);
}

TEST(Session, JsonPersistenceReplaysLog) {
  auto s = twenty_items();
  s.record_label(s.items()[0].post_id, "A", Label::OpioidRelated, "2026-01-01T00:00:00Z");
  s.record_label(s.items()[0].post_id, "A", Label::Unsure, "2026-01-01T00:01:00Z");
  s.record_skip(s.items()[1].post_id, "A", "2026-01-01T00:02:00Z");
  s.assign_subset("B", 4, 2);
  const auto dir = temp_dir("persist");
  save_session(s, dir / "s.json");
  auto back = load_session(dir / "s.json");
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_EQ(back.response(s.items()[0].post_id, "A"), Label::Unsure);
  EXPECT_EQ(back.status(s.items()[1].post_id, "A"), ItemStatus::Skipped);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// HTTP API

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = temp_dir("server");
    fs::create_directories(dir_ / "data");
    auto fx = fixtures::prediction_counts(3, 2, 1, 0, 14);
    {
      std::ofstream p(dir_ / "data" / "preds.jsonl");
      write_predictions_jsonl(p, fx.predictions);
      std::ofstream c(dir_ / "data" / "corpus.jsonl");
      export_jsonl(c, fx.corpus);
    }
    predictions_ = fx.predictions;
    start({});
  }
  void TearDown() override {
    server_.reset();
    fs::remove_all(dir_);
  }

  void start(std::optional<std::string> token) {
    server_.reset();
    server_ = std::make_unique<AnnotationServer>(ServerOptions{dir_ / "sessions", dir_ / "data", token, {}});
    port_ = server_->start();
  }

  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  std::string create(const std::string& extra = "") {
    auto c = client();
    auto res = c.Post("/sessions",
                      R"({"predictions_file":"preds.jsonl","corpus_file":"corpus.jsonl","session_id":"s1",)"
                      R"("policy":{"negative_fraction":1.0,"seed":3})" + extra + "}",
                      "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201) << res->body;
    return nlohmann::json::parse(res->body)["session_id"];
  }

  httplib::Result label(const std::string& post, const std::string& who, const std::string& lab) {
    auto c = client();
    return c.Post("/sessions/s1/labels",
                  nlohmann::json{{"post_id", post}, {"annotator", who}, {"label", lab}}.dump(), "application/json");
  }

  fs::path dir_;
  PredictionSet predictions_;
  std::unique_ptr<AnnotationServer> server_;
  int port_ = 0;
};

TEST_F(ServerTest, CreateListAndServeItems) {
  EXPECT_EQ(create(), "s1");
  auto c = client();
  auto list = c.Get("/sessions");
  ASSERT_TRUE(list);
  auto j = nlohmann::json::parse(list->body);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["items"], 20);

  auto next = c.Get("/sessions/s1/next?annotator=A");
  ASSERT_EQ(next->status, 200);
  auto item = nlohmann::json::parse(next->body);
  EXPECT_TRUE(item.contains("post_id"));
  EXPECT_TRUE(item.contains("text"));
  // Nothing the predictor said may leak to the annotator.
  for (Label l : kAllLabels) EXPECT_EQ(next->body.find(std::string(to_string(l))), std::string::npos);

  EXPECT_EQ(c.Get("/sessions/nope/next?annotator=A")->status, 404);
  EXPECT_EQ(c.Get("/sessions/s1/next")->status, 400);
}

TEST_F(ServerTest, LabelingUntilDoneThenExport) {
  create();
  auto c = client();
  int n = 0;
  for (;;) {
    auto next = c.Get("/sessions/s1/next?annotator=A");
    ASSERT_TRUE(next);
    if (next->status == 204) break;
    const std::string id = nlohmann::json::parse(next->body)["post_id"];
    auto res = label(id, "A", n % 2 ? "opioid-related" : "not opioid-related");
    ASSERT_EQ(res->status, 200) << res->body;
    ++n;
  }
  EXPECT_EQ(n, 20);
  auto exp = c.Get("/sessions/s1/export?annotator=A");
  ASSERT_EQ(exp->status, 200);
  std::istringstream csv(exp->body);
  EXPECT_EQ(read_gold_csv(csv).size(), 20u);
  EXPECT_EQ(c.Get("/sessions/s1/export?annotator=Z")->status, 404);
}

TEST_F(ServerTest, VocabularyViolationsRejected) {
  create();
  auto c = client();
  const std::string id = nlohmann::json::parse(c.Get("/sessions/s1/next?annotator=A")->body)["post_id"];
  EXPECT_EQ(label(id, "A", "maybe")->status, 400);
  EXPECT_EQ(label(id, "A", "api-error")->status, 400);
  EXPECT_EQ(label(id, "A", "content-restriction-error")->status, 400);
  EXPECT_EQ(label("unknown-post", "A", "unsure")->status, 404);
  EXPECT_EQ(c.Post("/sessions/s1/labels", "{bad json", "application/json")->status, 400);
  EXPECT_EQ(label(id, "A", "unsure")->status, 200);
}

TEST_F(ServerTest, SkipDefersItem) {
  create();
  auto c = client();
  const std::string first = nlohmann::json::parse(c.Get("/sessions/s1/next?annotator=A")->body)["post_id"];
  auto res = c.Post("/sessions/s1/skips", nlohmann::json{{"post_id", first}, {"annotator", "A"}}.dump(),
                    "application/json");
  ASSERT_EQ(res->status, 200);
  const std::string second = nlohmann::json::parse(c.Get("/sessions/s1/next?annotator=A")->body)["post_id"];
  EXPECT_NE(first, second);
}

TEST_F(ServerTest, AgreementMatchesOfflineComputation) {
  create();
  auto snap = *server_->snapshot("s1");
  std::vector<Label> a, b;
  for (std::size_t i = 0; i < 12; ++i) {
    const auto& id = snap.items()[i].post_id;
    a.push_back(kSemanticLabels[i % 3]);
    b.push_back(kSemanticLabels[(i * 7 / 3) % 3]);
    ASSERT_EQ(label(id, "A", std::string(to_string(a.back())))->status, 200);
    ASSERT_EQ(label(id, "B", std::string(to_string(b.back())))->status, 200);
  }
  auto c = client();
  auto res = c.Get("/sessions/s1/agreement?a=A&b=B");
  ASSERT_EQ(res->status, 200);
  auto got = nlohmann::json::parse(res->body);
  EXPECT_EQ(got, to_json(agreement(a, b)));
  EXPECT_EQ(c.Get("/sessions/s1/agreement?a=A")->status, 400);
  EXPECT_EQ(c.Get("/sessions/s1/agreement?a=A&b=Nobody")->status, 409);
}

TEST_F(ServerTest, ConcurrentAnnotatorsDoNotConflict) {
  create();
  auto snap = *server_->snapshot("s1");
  auto work = [&](const std::string& who) {
    for (const auto& it : snap.items()) {
      auto r = label(it.post_id, who, "unsure");
      EXPECT_EQ(r->status, 200);
    }
  };
  std::thread t1(work, "A"), t2(work, "B");
  t1.join();
  t2.join();
  auto after = *server_->snapshot("s1");
  EXPECT_EQ(after.responses_of("A").size(), 20u);
  EXPECT_EQ(after.responses_of("B").size(), 20u);
  EXPECT_EQ(after.log().size(), 40u);
}

TEST_F(ServerTest, SessionsSurviveRestart) {
  create();
  const std::string id = server_->snapshot("s1")->items()[0].post_id;
  ASSERT_EQ(label(id, "A", "opioid-related")->status, 200);
  start({});
  auto snap = server_->snapshot("s1");
  ASSERT_TRUE(snap.has_value());
  EXPECT_EQ(snap->response(id, "A"), Label::OpioidRelated);
}

TEST_F(ServerTest, PathsOutsideDataRootRejected) {
  auto c = client();
  auto res = c.Post("/sessions", R"({"predictions_file":"../../etc/passwd","corpus_file":"corpus.jsonl",)"
                                 R"("policy":{"negative_fraction":1.0}})",
                    "application/json");
  EXPECT_EQ(res->status, 409);
  auto dup = [&] { return c.Post("/sessions", R"({"predictions_file":"preds.jsonl","corpus_file":"corpus.jsonl","session_id":"dup","policy":{"negative_fraction":1.0}})", "application/json"); };
  EXPECT_EQ(dup()->status, 201);
  EXPECT_EQ(dup()->status, 409);
}

TEST_F(ServerTest, BearerTokenEnforcedWhenConfigured) {
  start(std::string("secret"));
  auto c = client();
  EXPECT_EQ(c.Get("/sessions")->status, 401);
  c.set_bearer_token_auth("secret");
  EXPECT_EQ(c.Get("/sessions")->status, 200);
}
