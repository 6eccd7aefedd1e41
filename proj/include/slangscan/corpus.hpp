#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "slangscan/match_policy.hpp"

namespace slangscan {

struct Post {
  std::string id;
  std::string text;
  std::optional<std::string> created_at;
  std::string source;
  nlohmann::json meta = nlohmann::json::object();

  friend bool operator==(const Post&, const Post&) = default;
};

struct Provenance {
  std::string source;
  std::string ingested_at;  // ISO-8601 UTC
  std::vector<std::string> filters;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Immutable ordered collection of posts with unique ids.
class Corpus {
 public:
  Corpus() = default;
  /// Throws ContractError on an empty or duplicate id.
  Corpus(std::vector<Post> posts, Provenance provenance);

  std::span<const Post> posts() const noexcept { return posts_; }
  std::size_t size() const noexcept { return posts_.size(); }
  bool empty() const noexcept { return posts_.empty(); }
  auto begin() const noexcept { return posts_.cbegin(); }
  auto end() const noexcept { return posts_.cend(); }
  const Post& operator[](std::size_t i) const { return posts_[i]; }

  const Provenance& provenance() const noexcept { return provenance_; }
  const Post* find(std::string_view id) const;

  /// New corpus with `posts` and this provenance plus one filter descriptor.
  Corpus derive(std::vector<Post> posts, std::string filter_descriptor) const;

 private:
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> index_;
  Provenance provenance_;
};

enum class Format { Jsonl, Csv };

std::optional<Format> parse_format(std::string_view name);
/// ".csv" -> Csv, anything else -> Jsonl.
Format format_for_path(const std::filesystem::path& path);

struct IngestStats {
  std::size_t records = 0;
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t invalid_utf8 = 0;
  std::size_t empty_text = 0;
  std::size_t duplicates = 0;
  /// First few warning messages, for logs.
  std::vector<std::string> examples;

  std::size_t warnings() const noexcept {
    return malformed + invalid_utf8 + empty_text + duplicates;
  }
};

/// Record-at-a-time reader. Bad records are skipped and tallied; only an
/// unreadable stream throws. Text is normalized on the way in. Duplicate
/// ids are not detected here (that needs corpus-wide state).
class PostReader {
 public:
  PostReader(std::istream& in, Format format);
  ~PostReader();
  PostReader(const PostReader&) = delete;
  PostReader& operator=(const PostReader&) = delete;

  std::optional<Post> next();
  /// Up to `max_posts` posts; empty at end of input.
  std::vector<Post> next_batch(std::size_t max_posts);
  const IngestStats& stats() const noexcept { return stats_; }

 private:
  bool next_jsonl(Post& out);
  bool next_csv(Post& out);
  void warn(std::size_t& counter, std::string message);

  std::istream& in_;
  Format format_;
  IngestStats stats_;
  std::size_t line_no_ = 0;
  std::vector<std::string> csv_header_;
};

struct IngestResult {
  Corpus corpus;
  IngestStats stats;
};

/// Whole-stream ingestion; duplicate ids resolve to the last record (kept at
/// the position of the first occurrence) and are tallied.
IngestResult ingest(std::istream& in, Format format, std::string source_description);
IngestResult ingest_file(const std::filesystem::path& path, std::optional<Format> format = {});

/// Stream posts through `sink` without materializing a corpus.
IngestStats for_each_post(std::istream& in, Format format, const std::function<void(Post&&)>& sink);

nlohmann::json to_json(const Post& post);
/// Throws std::invalid_argument on a structurally invalid object.
Post post_from_json(const nlohmann::json& j);

void write_jsonl(std::ostream& out, const Post& post);
void export_jsonl(std::ostream& out, const Corpus& corpus);
nlohmann::json provenance_to_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::json& j);

/// Posts whose text contains `term` under `policy`.
Corpus filter_by_term(const Corpus& corpus, std::string_view term, const MatchPolicy& policy = {});

/// Uniform random subset of size n in shuffled order, deterministic in seed.
/// Throws ContractError when n > corpus.size().
Corpus sample(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Index order produced by sample(): first n entries of a seeded partial
/// Fisher-Yates shuffle of [0, size).
std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n, std::uint64_t seed);

std::string utc_timestamp();

}  // namespace slangscan
