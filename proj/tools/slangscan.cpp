// Command-line front end. Every subcommand reads files, calls the library
// and writes its result to --output (stdout when omitted or "-").

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slangscan/adjudicator.hpp"
#include "slangscan/annotation.hpp"
#include "slangscan/annotation_server.hpp"
#include "slangscan/corpus.hpp"
#include "slangscan/error.hpp"
#include "slangscan/evaluator.hpp"
#include "slangscan/lexicon.hpp"
#include "slangscan/mock_provider.hpp"
#include "slangscan/prompt.hpp"
#include "slangscan/provider.hpp"
#include "slangscan/slang_sim.hpp"

namespace fs = std::filesystem;
using namespace slangscan;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output = "-";
};

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

nlohmann::json config_section(const Globals& g, const char* key) {
  if (g.config_path.empty()) return nlohmann::json::object();
  const auto j = load_json(g.config_path);
  return j.value(key, nlohmann::json::object());
}

// Writes to a temporary sibling and renames on commit, so a crash never
// leaves a half-written result behind.
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path_ != "-") {
      tmp_ = path_ + ".partial";
      file_.open(tmp_, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error("cannot write " + path_);
    }
  }
  std::ostream& stream() { return path_ == "-" ? std::cout : file_; }
  void commit() {
    if (path_ == "-") {
      std::cout.flush();
      return;
    }
    file_.close();
    if (!file_) throw Error("write failed for " + path_);
    fs::rename(tmp_, path_);
  }

 private:
  std::string path_, tmp_;
  std::ofstream file_;
};

Corpus read_corpus(const std::string& path) {
  auto r = ingest_file(path);
  if (r.stats.warnings() > 0) {
    std::cerr << path << ": skipped " << r.stats.warnings() << " record(s)";
    if (!r.stats.examples.empty()) std::cerr << " (first: " << r.stats.examples.front() << ")";
    std::cerr << '\n';
  }
  return std::move(r.corpus);
}

PredictionSet read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  return read_predictions_jsonl(in);
}

// ---------------------------------------------------------------------------

int run_ingest(const Globals& g, const std::string& input, const std::string& format) {
  std::optional<Format> f;
  if (!format.empty()) {
    f = parse_format(format);
    if (!f) throw ConfigError("unknown format '" + format + "'");
  }
  auto r = ingest_file(input, f);
  Output out(g.output);
  export_jsonl(out.stream(), r.corpus);
  out.commit();
  std::cerr << "ingested " << r.corpus.size() << " posts from " << r.stats.records << " records (malformed "
            << r.stats.malformed << ", invalid utf-8 " << r.stats.invalid_utf8 << ", empty " << r.stats.empty_text
            << ", duplicates " << r.stats.duplicates << ")\n";
  return 0;
}

int run_filter(const Globals& g, const std::string& input, const std::string& term) {
  const Corpus c = read_corpus(input);
  const Corpus f = filter_by_term(c, term);
  Output out(g.output);
  export_jsonl(out.stream(), f);
  out.commit();
  std::cerr << f.size() << " of " << c.size() << " posts contain '" << term << "'\n";
  return 0;
}

int run_classify(const Globals& g, const std::string& input, const std::string& lexicon_path, unsigned threads) {
  const Corpus c = read_corpus(input);
  const Lexicon lex = load_lexicon_file(lexicon_path);
  const PredictionSet preds = classify_corpus(c, lex, threads);
  Output out(g.output);
  write_predictions_jsonl(out.stream(), preds);
  out.commit();
  std::size_t positives = 0;
  for (const auto& p : preds.entries()) positives += p.label == Label::OpioidRelated;
  std::cerr << "lexicon " << lex.name() << " (" << lex.terms().size() << " terms): " << positives << " of "
            << preds.size() << " posts flagged\n";
  return 0;
}

struct AdjudicateArgs {
  std::string corpus;
  std::string transcripts;
  std::size_t batch_size = 10;
  bool resume = false;
  bool resolve = false;
};

int run_adjudicate(const Globals& g, const AdjudicateArgs& a) {
  ProviderConfig cfg = config_section(g, "provider").get<ProviderConfig>();
  PromptScheme scheme = config_section(g, "scheme").get<PromptScheme>();
  validate(cfg);
  auto provider = make_provider(cfg);
  const Corpus corpus = read_corpus(a.corpus);

  std::optional<PredictionSet> prior;
  if (a.resume) {
    if (g.output == "-") throw ConfigError("--resume needs --output");
    if (fs::exists(g.output)) prior = read_predictions(g.output);
    // A crash leaves newer labels in the journal next to the output.
    const std::string journal = g.output + ".journal";
    if (fs::exists(journal)) {
      PredictionSet j = read_predictions(journal);
      if (!prior) prior = PredictionSet(j.predictor_id());
      for (const auto& p : j.entries()) prior->set(p);
    }
    if (prior) std::cerr << "resuming: " << prior->size() << " posts already labeled\n";
  }

  std::ofstream journal;
  if (g.output != "-") journal.open(g.output + ".journal", std::ios::app);
  std::ofstream tx_out;
  if (!a.transcripts.empty()) tx_out.open(a.transcripts, a.resume ? std::ios::app : std::ios::trunc);

  AdjudicationOptions opts;
  opts.batch_size = a.batch_size;
  opts.prior = prior ? &*prior : nullptr;
  opts.predictor_id = provider->id();
  opts.on_prediction = [&](const Prediction& p) {
    if (!journal.is_open()) return;
    PredictionSet one(provider->id());
    one.set(p);
    write_predictions_jsonl(journal, one);
    journal.flush();
  };
  opts.on_transcript = [&](const PromptTranscript& t) {
    if (tx_out.is_open()) tx_out << to_json(t).dump() << '\n' << std::flush;
  };

  auto result = adjudicate(corpus, *provider, cfg, scheme, opts);
  PredictionSet preds = a.resolve ? resolve_errors(result.predictions) : std::move(result.predictions);
  Output out(g.output);
  write_predictions_jsonl(out.stream(), preds);
  out.commit();
  if (journal.is_open()) {
    journal.close();
    fs::remove(g.output + ".journal");
  }
  const auto& s = result.stats;
  std::cerr << "adjudicated " << corpus.size() - s.skipped_prior << " posts in " << s.batches << " batches, "
            << s.requests << " requests, " << s.retries() << " retries, " << s.content_refusals << " refusals, "
            << s.api_errors << " api errors\n";
  for (const auto& n : s.notes) std::cerr << "note: " << n << '\n';
  return 0;
}

struct SubstituteArgs {
  std::string corpus;
  std::string map_path;
  std::string opioid, non_opioid;
  std::string out_dir;
};

int run_substitute(const Globals& g, const SubstituteArgs& a) {
  const SubstitutionMap map = a.map_path.empty() ? default_substitution_map() : load_substitution_map(a.map_path);
  if (!a.opioid.empty() || !a.non_opioid.empty()) {
    if (a.opioid.empty() || a.non_opioid.empty() || a.out_dir.empty()) {
      throw ConfigError("paired mode needs --opioid, --non-opioid and --output-dir");
    }
    auto ds = build_paired_dataset(read_corpus(a.opioid), read_corpus(a.non_opioid), map);
    fs::create_directories(a.out_dir);
    Output orig((fs::path(a.out_dir) / "original.jsonl").string());
    export_jsonl(orig.stream(), ds.original);
    orig.commit();
    Output mod((fs::path(a.out_dir) / "modified.jsonl").string());
    export_jsonl(mod.stream(), ds.modified);
    mod.commit();
    GoldSet gold;
    for (const auto& p : ds.original) {
      gold.add(p.id, p.meta["class"] == "opioid-related" ? Label::OpioidRelated : Label::NotOpioidRelated);
    }
    Output gold_out((fs::path(a.out_dir) / "gold.csv").string());
    write_gold_csv(gold_out.stream(), gold);
    gold_out.commit();
    std::cerr << "wrote " << ds.original.size() << " paired posts to " << a.out_dir << '\n';
    return 0;
  }
  if (a.corpus.empty()) throw ConfigError("substitute needs a corpus or --opioid/--non-opioid");
  const Corpus c = read_corpus(a.corpus);
  Output out(g.output);
  std::size_t total = 0;
  for (const auto& p : c) {
    Post s = substitute(p, map);
    total += s.meta["substitutions"].get<std::size_t>();
    write_jsonl(out.stream(), s);
  }
  out.commit();
  std::cerr << total << " substitutions in " << c.size() << " posts\n";
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> predictions;
  std::string gold;
  std::string format = "text";
  std::string csv;
  bool labeled_only = false;
};

int run_evaluate(const Globals& g, const EvaluateArgs& a) {
  const GoldSet gold = read_gold_file(a.gold);
  std::vector<MetricsReport> reports;
  for (const auto& path : a.predictions) {
    PredictionSet preds = read_predictions(path);
    if (preds.predictor_id().empty()) preds.set_predictor_id(fs::path(path).stem().string());
    reports.push_back(evaluate(preds, gold));
  }
  Output out(g.output);
  if (a.format == "json") {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports) j.push_back(to_json(r));
    out.stream() << (reports.size() == 1 ? j[0] : j).dump(2) << '\n';
  } else {
    for (std::size_t i = 0; i < reports.size(); ++i) out.stream() << (i ? "\n" : "") << to_text(reports[i]);
  }
  out.commit();
  if (!a.csv.empty()) {
    Output csv(a.csv);
    write_metrics_csv(csv.stream(), reports);
    csv.commit();
  }
  return 0;
}

int run_agreement(const Globals& g, const std::string& a, const std::string& b) {
  const auto r = agreement(read_gold_file(a), read_gold_file(b));
  Output out(g.output);
  out.stream() << to_json(r).dump(2) << '\n';
  out.commit();
  return 0;
}

struct SampleArgs {
  std::string predictions, corpus;
  std::optional<double> fraction;
  std::optional<std::size_t> count;
  std::vector<std::string> take_all;
  std::string session_id = "session";
  std::string second_annotator;
  std::size_t subset = 0;
};

int run_sample(const Globals& g, const SampleArgs& a) {
  nlohmann::json pj = config_section(g, "sampling");
  SamplingPolicy policy;
  if (!pj.empty()) policy = sampling_policy_from_json(pj);
  if (a.fraction || a.count) {
    policy.negative_fraction = a.fraction;
    policy.negative_count = a.count;
  }
  if (!a.take_all.empty()) {
    policy.take_all_of.clear();
    for (const auto& s : a.take_all) {
      auto l = parse_label(s);
      if (!l) throw ConfigError("unknown label '" + s + "'");
      policy.take_all_of.insert(*l);
    }
  }
  if (g.seed) policy.seed = *g.seed;
  policy.validate();
  AnnotationSession s = build_session(read_predictions(a.predictions), read_corpus(a.corpus), policy, a.session_id);
  if (!a.second_annotator.empty()) s.assign_subset(a.second_annotator, a.subset, policy.seed);
  Output out(g.output);
  out.stream() << to_json(s).dump(1) << '\n';
  out.commit();
  std::cerr << "session " << s.id() << ": " << s.items().size() << " items\n";
  return 0;
}

struct ServeArgs {
  std::string sessions = "sessions";
  std::string data_root = ".";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token_env;
  std::string static_dir;
  std::vector<std::string> import;
};

int run_serve(const Globals&, const ServeArgs& a) {
  ServerOptions opts;
  opts.session_dir = a.sessions;
  opts.data_root = a.data_root;
  if (!a.token_env.empty()) {
    const char* t = std::getenv(a.token_env.c_str());
    if (t == nullptr || *t == '\0') throw ConfigError("environment variable " + a.token_env + " is not set");
    opts.token = t;
  }
  if (!a.static_dir.empty()) opts.static_dir = a.static_dir;
  AnnotationServer server(opts);
  for (const auto& path : a.import) server.add_session(load_session(path));
  std::cerr << "serving annotation API on http://" << a.host << ":" << a.port << '\n';
  server.listen(a.host, a.port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slangscan: find low-prevalence topical posts in social-media corpora"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for any random sampling");
  app.add_option("-o,--output", g.output, "Output file ('-' for stdout)");

  std::string input, format, term, lexicon;
  unsigned threads = 0;
  auto* ingest = app.add_subcommand("ingest", "Read JSONL/CSV posts, normalize text, write JSONL");
  ingest->add_option("input", input)->required()->check(CLI::ExistingFile);
  ingest->add_option("--format", format, "jsonl or csv (default: by extension)");

  auto* filter = app.add_subcommand("filter", "Keep posts that contain a term");
  filter->add_option("corpus", input)->required()->check(CLI::ExistingFile);
  filter->add_option("--term", term)->required();

  auto* classify = app.add_subcommand("classify-lexicon", "Label posts by lexicon membership");
  classify->add_option("corpus", input)->required()->check(CLI::ExistingFile);
  classify->add_option("--lexicon", lexicon)->required()->check(CLI::ExistingFile);
  classify->add_option("--threads", threads, "Worker threads (0 = all cores)");

  AdjudicateArgs adj;
  auto* adjudicate_cmd = app.add_subcommand("adjudicate", "Label posts with the two-turn chat prompt");
  adjudicate_cmd->add_option("corpus", adj.corpus)->required()->check(CLI::ExistingFile);
  adjudicate_cmd->add_option("--batch-size", adj.batch_size)->check(CLI::PositiveNumber);
  adjudicate_cmd->add_option("--transcripts", adj.transcripts, "Append prompt transcripts (JSONL) here");
  adjudicate_cmd->add_flag("--resume", adj.resume, "Skip posts already labeled in --output");
  adjudicate_cmd->add_flag("--resolve-errors", adj.resolve, "Write error labels as not-opioid-related");

  SubstituteArgs sub;
  auto* substitute_cmd = app.add_subcommand("substitute", "Replace slang terms with invented ones");
  substitute_cmd->add_option("corpus", sub.corpus);
  substitute_cmd->add_option("--map", sub.map_path, "Substitution map JSON (default: built-in)");
  substitute_cmd->add_option("--opioid", sub.opioid, "Paired mode: opioid-related posts");
  substitute_cmd->add_option("--non-opioid", sub.non_opioid, "Paired mode: other posts");
  substitute_cmd->add_option("--output-dir", sub.out_dir, "Paired mode: directory for the outputs");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against manual labels");
  evaluate_cmd->add_option("--predictions", ev.predictions)->required();
  evaluate_cmd->add_option("--gold", ev.gold)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--format", ev.format)->check(CLI::IsMember({"text", "json"}));
  evaluate_cmd->add_option("--csv", ev.csv, "Also write metrics as CSV for plotting");

  std::string ga, gb;
  auto* agreement_cmd = app.add_subcommand("agreement", "Inter-annotator agreement of two gold files");
  agreement_cmd->add_option("a", ga)->required()->check(CLI::ExistingFile);
  agreement_cmd->add_option("b", gb)->required()->check(CLI::ExistingFile);

  SampleArgs sa;
  double fraction = 0;
  std::size_t count = 0;
  auto* sample_cmd = app.add_subcommand("sample-session", "Build a manual-labeling session from predictions");
  sample_cmd->add_option("--predictions", sa.predictions)->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--corpus", sa.corpus)->required()->check(CLI::ExistingFile);
  auto* frac_opt = sample_cmd->add_option("--fraction", fraction, "Share of the remaining posts to sample")
                       ->check(CLI::Range(0.0, 1.0));
  auto* count_opt = sample_cmd->add_option("--count", count, "Number of remaining posts to sample");
  frac_opt->excludes(count_opt);
  sample_cmd->add_option("--take-all", sa.take_all, "Labels included in full");
  sample_cmd->add_option("--session-id", sa.session_id);
  sample_cmd->add_option("--second-annotator", sa.second_annotator);
  sample_cmd->add_option("--subset", sa.subset, "Items assigned to the second annotator");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation HTTP API");
  serve_cmd->add_option("--sessions", sv.sessions, "Directory holding session documents");
  serve_cmd->add_option("--data-root", sv.data_root, "Directory that session inputs are read from");
  serve_cmd->add_option("--host", sv.host);
  serve_cmd->add_option("--port", sv.port);
  serve_cmd->add_option("--token-env", sv.token_env, "Environment variable holding a shared bearer token");
  serve_cmd->add_option("--static", sv.static_dir, "Directory of UI files served at /");
  serve_cmd->add_option("--import", sv.import, "Session JSON files to load at startup");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed;
  if (frac_opt->count() > 0) sa.fraction = fraction;
  if (count_opt->count() > 0) sa.count = count;

  try {
    if (*ingest) return run_ingest(g, input, format);
    if (*filter) return run_filter(g, input, term);
    if (*classify) return run_classify(g, input, lexicon, threads);
    if (*adjudicate_cmd) return run_adjudicate(g, adj);
    if (*substitute_cmd) return run_substitute(g, sub);
    if (*evaluate_cmd) return run_evaluate(g, ev);
    if (*agreement_cmd) return run_agreement(g, ga, gb);
    if (*sample_cmd) return run_sample(g, sa);
    if (*serve_cmd) return run_serve(g, sv);
  } catch (const MissingPredictionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
