#include "slangscan/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>

#include "slangscan/error.hpp"
#include "slangscan/lexicon.hpp"
#include "slangscan/random.hpp"
#include "slangscan/text.hpp"

namespace slangscan {

Corpus::Corpus(std::vector<Post> posts, Provenance provenance)
    : posts_(std::move(posts)), provenance_(std::move(provenance)) {
  index_.reserve(posts_.size());
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    if (posts_[i].id.empty()) throw ContractError("post at position " + std::to_string(i) + " has an empty id");
    if (!index_.emplace(posts_[i].id, i).second) {
      throw ContractError("duplicate post id '" + posts_[i].id + "'");
    }
  }
}

const Post* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &posts_[it->second];
}

Corpus Corpus::derive(std::vector<Post> posts, std::string filter_descriptor) const {
  Provenance p = provenance_;
  p.filters.push_back(std::move(filter_descriptor));
  return Corpus(std::move(posts), std::move(p));
}

std::optional<Format> parse_format(std::string_view name) {
  if (name == "jsonl" || name == "json") return Format::Jsonl;
  if (name == "csv") return Format::Csv;
  return std::nullopt;
}

Format format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? Format::Csv : Format::Jsonl;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON mapping

nlohmann::json to_json(const Post& post) {
  nlohmann::json j;
  j["id"] = post.id;
  j["text"] = post.text;
  j["created_at"] = post.created_at ? nlohmann::json(*post.created_at) : nlohmann::json(nullptr);
  j["source"] = post.source;
  j["meta"] = post.meta;
  return j;
}

Post post_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  Post p;
  auto id = j.find("id");
  if (id == j.end()) throw std::invalid_argument("missing \"id\"");
  if (id->is_string()) {
    p.id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    p.id = id->dump();  // numeric tweet ids are common in archives
  } else {
    throw std::invalid_argument("\"id\" must be a string");
  }
  auto text = j.find("text");
  if (text == j.end() || !text->is_string()) throw std::invalid_argument("\"text\" must be a string");
  p.text = text->get<std::string>();
  if (auto c = j.find("created_at"); c != j.end() && !c->is_null()) {
    if (!c->is_string()) throw std::invalid_argument("\"created_at\" must be a string or null");
    p.created_at = c->get<std::string>();
  }
  if (auto s = j.find("source"); s != j.end() && !s->is_null()) {
    if (!s->is_string()) throw std::invalid_argument("\"source\" must be a string");
    p.source = s->get<std::string>();
  }
  if (auto m = j.find("meta"); m != j.end() && !m->is_null()) {
    if (!m->is_object()) throw std::invalid_argument("\"meta\" must be an object");
    p.meta = *m;
  }
  if (p.id.empty()) throw std::invalid_argument("empty \"id\"");
  return p;
}

void write_jsonl(std::ostream& out, const Post& post) { out << to_json(post).dump() << '\n'; }

void export_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& p : corpus) write_jsonl(out, p);
}

nlohmann::json provenance_to_json(const Provenance& p) {
  return nlohmann::json{{"source", p.source}, {"ingested_at", p.ingested_at}, {"filters", p.filters}};
}

Provenance provenance_from_json(const nlohmann::json& j) {
  Provenance p;
  p.source = j.value("source", std::string{});
  p.ingested_at = j.value("ingested_at", std::string{});
  p.filters = j.value("filters", std::vector<std::string>{});
  return p;
}

// ---------------------------------------------------------------------------
// Reader

namespace {

constexpr std::size_t kMaxExamples = 20;

// One RFC 4180 record. Returns false at end of input; sets `ok` false on an
// unterminated quote.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, bool& ok, std::size_t& lines) {
  fields.clear();
  ok = true;
  int c = in.get();
  if (c == EOF) return false;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (;; c = in.get()) {
    if (c == EOF) {
      if (quoted) ok = false;
      fields.push_back(std::move(field));
      ++lines;
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++lines;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      ++lines;
      return true;
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
}

}  // namespace

PostReader::PostReader(std::istream& in, Format format) : in_(in), format_(format) {
  if (!in_.good() && !in_.eof()) throw IngestError("input stream is not readable");
}

PostReader::~PostReader() = default;

void PostReader::warn(std::size_t& counter, std::string message) {
  ++counter;
  if (stats_.examples.size() < kMaxExamples) stats_.examples.push_back(std::move(message));
}

std::optional<Post> PostReader::next() {
  Post p;
  const bool got = format_ == Format::Jsonl ? next_jsonl(p) : next_csv(p);
  if (in_.bad()) throw IngestError("read error on input stream");
  if (!got) return std::nullopt;
  return p;
}

std::vector<Post> PostReader::next_batch(std::size_t max_posts) {
  std::vector<Post> batch;
  batch.reserve(max_posts);
  while (batch.size() < max_posts) {
    auto p = next();
    if (!p) break;
    batch.push_back(std::move(*p));
  }
  return batch;
}

bool PostReader::next_jsonl(Post& out) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++stats_.records;
    const std::string where = "line " + std::to_string(line_no_);
    if (!text::is_valid_utf8(line)) {
      warn(stats_.invalid_utf8, where + ": invalid UTF-8");
      continue;
    }
    try {
      out = post_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      warn(stats_.malformed, where + ": " + e.what());
      continue;
    }
    out.text = text::normalize(out.text);
    if (out.text.empty()) {
      warn(stats_.empty_text, where + ": empty text");
      continue;
    }
    ++stats_.accepted;
    return true;
  }
  return false;
}

bool PostReader::next_csv(Post& out) {
  std::vector<std::string> fields;
  bool ok = true;
  if (csv_header_.empty()) {
    std::size_t lines = 0;
    if (!read_csv_record(in_, fields, ok, lines)) return false;
    line_no_ += lines;
    if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
    csv_header_ = fields;
    auto has = [&](std::string_view name) {
      return std::find(csv_header_.begin(), csv_header_.end(), name) != csv_header_.end();
    };
    if (!ok || !has("id") || !has("text")) {
      throw IngestError("CSV header must name at least the columns id,text");
    }
  }
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::find(csv_header_.begin(), csv_header_.end(), name);
    if (it == csv_header_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - csv_header_.begin());
  };
  const auto id_col = *column("id");
  const auto text_col = *column("text");
  const auto source_col = column("source");
  const auto created_col = column("created_at");

  for (;;) {
    std::size_t lines = 0;
    const std::size_t first_line = line_no_ + 1;
    if (!read_csv_record(in_, fields, ok, lines)) return false;
    line_no_ += lines;
    if (fields.size() == 1 && fields[0].empty()) continue;
    ++stats_.records;
    const std::string where = "line " + std::to_string(first_line);
    if (!ok || fields.size() != csv_header_.size()) {
      warn(stats_.malformed, where + ": expected " + std::to_string(csv_header_.size()) + " fields");
      continue;
    }
    bool utf8 = true;
    for (const auto& f : fields) utf8 = utf8 && text::is_valid_utf8(f);
    if (!utf8) {
      warn(stats_.invalid_utf8, where + ": invalid UTF-8");
      continue;
    }
    if (fields[id_col].empty()) {
      warn(stats_.malformed, where + ": empty id");
      continue;
    }
    out = Post{};
    out.id = fields[id_col];
    out.text = text::normalize(fields[text_col]);
    if (source_col) out.source = fields[*source_col];
    if (created_col && !fields[*created_col].empty()) out.created_at = fields[*created_col];
    if (out.text.empty()) {
      warn(stats_.empty_text, where + ": empty text");
      continue;
    }
    ++stats_.accepted;
    return true;
  }
}

IngestStats for_each_post(std::istream& in, Format format, const std::function<void(Post&&)>& sink) {
  PostReader reader(in, format);
  while (auto p = reader.next()) sink(std::move(*p));
  return reader.stats();
}

IngestResult ingest(std::istream& in, Format format, std::string source_description) {
  PostReader reader(in, format);
  std::vector<Post> posts;
  std::unordered_map<std::string, std::size_t> seen;
  IngestStats dup_stats;
  while (auto p = reader.next()) {
    auto [it, fresh] = seen.emplace(p->id, posts.size());
    if (fresh) {
      posts.push_back(std::move(*p));
    } else {
      ++dup_stats.duplicates;
      if (dup_stats.examples.size() < kMaxExamples) {
        dup_stats.examples.push_back("duplicate id '" + p->id + "': last record wins");
      }
      posts[it->second] = std::move(*p);
    }
  }
  IngestStats stats = reader.stats();
  stats.duplicates = dup_stats.duplicates;
  stats.accepted -= dup_stats.duplicates;
  for (auto& e : dup_stats.examples) {
    if (stats.examples.size() < kMaxExamples) stats.examples.push_back(std::move(e));
  }
  Provenance prov{std::move(source_description), utc_timestamp(), {}};
  return IngestResult{Corpus(std::move(posts), std::move(prov)), std::move(stats)};
}

IngestResult ingest_file(const std::filesystem::path& path, std::optional<Format> format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  return ingest(in, format.value_or(format_for_path(path)), path.string());
}

// ---------------------------------------------------------------------------

namespace {

std::string describe_policy(const MatchPolicy& p) {
  std::string s;
  s += p.case_insensitive ? "ci" : "cs";
  s += p.word_boundary ? ",boundary" : ",substring";
  s += p.allow_multiword ? ",multiword" : ",single-word";
  return s;
}

}  // namespace

Corpus filter_by_term(const Corpus& corpus, std::string_view term, const MatchPolicy& policy) {
  if (term.empty()) throw ContractError("filter term must be nonempty");
  const Matcher matcher({normalize_term(term, policy)}, policy);
  std::vector<Post> kept;
  for (const auto& p : corpus) {
    if (matcher.matches(text::normalize(p.text))) kept.push_back(p);
  }
  nlohmann::json descriptor{{"op", "filter_by_term"},
                            {"term", std::string(term)},
                            {"policy", describe_policy(policy)}};
  return corpus.derive(std::move(kept), descriptor.dump());
}

std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n, std::uint64_t seed) {
  if (n > size) {
    throw ContractError("sample size " + std::to_string(n) + " exceeds corpus size " + std::to_string(size));
  }
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

Corpus sample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  std::vector<Post> picked;
  picked.reserve(n);
  for (auto i : sample_indices(corpus.size(), n, seed)) picked.push_back(corpus[i]);
  nlohmann::json descriptor{{"op", "sample"}, {"n", n}, {"seed", seed}};
  return corpus.derive(std::move(picked), descriptor.dump());
}

}  // namespace slangscan
