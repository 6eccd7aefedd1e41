#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "slangscan/label.hpp"
#include "slangscan/prediction.hpp"

namespace slangscan {

/// Manual labels keyed by post id, in file order.
class GoldSet {
 public:
  struct Item {
    std::string post_id;
    Label label;
  };

  /// Throws ContractError on an error label or a repeated id.
  void add(std::string post_id, Label label);
  const Label* find(std::string_view post_id) const;
  std::span<const Item> items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// CSV "post_id,label"; a header row is optional. Throws IngestError on a
/// bad row.
GoldSet read_gold_csv(std::istream& in);
GoldSet read_gold_file(const std::filesystem::path& path);
void write_gold_csv(std::ostream& out, const GoldSet& gold);

/// Predicted label (5 rows, including the two error categories) against
/// manual label (3 columns). Predictions that have no gold label are kept
/// out of the cells and tallied per row in `unlabeled`.
class ConfusionMatrix3 {
 public:
  using Rows = std::array<std::array<std::size_t, 3>, 5>;

  ConfusionMatrix3() = default;
  /// Rows in Label order; omitted error rows are zero.
  static ConfusionMatrix3 from_rows(std::span<const std::array<std::size_t, 3>> rows);

  void add(Label predicted, Label gold, std::size_t n = 1);
  void add_unlabeled(Label predicted, std::size_t n = 1);

  std::size_t at(Label predicted, Label gold) const;
  std::size_t unlabeled(Label predicted) const { return unlabeled_[index_of(predicted)]; }
  std::size_t unlabeled_total() const noexcept;
  std::size_t total() const noexcept;
  std::size_t row_total(Label predicted) const;
  std::size_t column_total(Label gold) const;
  const Rows& rows() const noexcept { return counts_; }

  /// Same matrix with the error rows merged into NotOpioidRelated.
  ConfusionMatrix3 folded() const;

  friend bool operator==(const ConfusionMatrix3&, const ConfusionMatrix3&) = default;

 private:
  Rows counts_{};
  std::array<std::size_t, 5> unlabeled_{};
};

/// Unsure and NotOpioidRelated are negative. Throws ContractError for an
/// error label.
bool binarize(Label label);

/// Cell counts after binarizing both axes; error rows count as negative
/// predictions.
struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

BinaryCounts binary_counts(const ConfusionMatrix3& cm);

/// Absent values are undefined (zero denominator), never silently 0.
struct BinaryMetrics {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

BinaryMetrics binary_metrics(const BinaryCounts& counts);
BinaryMetrics binary_metrics(const ConfusionMatrix3& cm);

struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

struct MacroMetrics {
  std::optional<double> accuracy;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  std::array<ClassMetrics, 3> per_class{};
};

/// One-vs-rest metrics over the three semantic classes after folding error
/// rows into NotOpioidRelated. A per-class value that is undefined enters
/// the unweighted mean as 0.
MacroMetrics macro_metrics(const ConfusionMatrix3& cm);

enum class Baseline { IncludeAll, ExcludeAll };
std::string_view to_string(Baseline b) noexcept;

/// Metrics of labeling every gold item positive (IncludeAll) or negative.
/// Throws ContractError on an empty gold set.
BinaryMetrics baseline(Baseline kind, const GoldSet& gold);

/// Throws MissingPredictionError when a gold item has no prediction.
ConfusionMatrix3 confusion(const PredictionSet& predictions, const GoldSet& gold);

/// Computes binary metrics straight from aligned label pairs, without a
/// confusion matrix. Error predictions count as negative.
BinaryMetrics binary_metrics_from_pairs(std::span<const Label> predicted, std::span<const Label> gold);

// ---------------------------------------------------------------------------
// Agreement

enum class KappaMode { ThreeClass, Binarized };

struct KappaResult {
  std::optional<double> kappa;  // undefined when p_e == 1
  double observed = 0;          // p_o
  double chance = 0;            // p_e
  std::size_t n = 0;
};

/// Throws ContractError on length mismatch, empty input or error labels.
KappaResult cohens_kappa(std::span<const Label> a, std::span<const Label> b, KappaMode mode);

/// 0 for NotOpioidRelated, 1 for Unsure, 2 for OpioidRelated.
int rank_value(Label label);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const int> values);

/// Pearson correlation of the average ranks of the 0/1/2 codes. Undefined
/// when either sequence is constant. Throws ContractError on length mismatch
/// or fewer than two items.
std::optional<double> spearman(std::span<const Label> a, std::span<const Label> b);

struct AgreementReport {
  std::optional<double> kappa_3class;
  std::optional<double> kappa_binarized;
  std::optional<double> spearman_rho;
  std::size_t n_items = 0;
  double observed_3class = 0;
  double chance_3class = 0;
  double observed_binarized = 0;
  double chance_binarized = 0;
};

AgreementReport agreement(std::span<const Label> a, std::span<const Label> b);
/// Aligns two annotators on the ids both labeled. Throws ContractError when
/// they share no items.
AgreementReport agreement(const GoldSet& a, const GoldSet& b);

nlohmann::json to_json(const AgreementReport& r);

// ---------------------------------------------------------------------------
// Reports

struct MetricsReport {
  std::string predictor_id;
  ConfusionMatrix3 matrix;
  BinaryMetrics binary;
  MacroMetrics macro;
  BinaryMetrics include_all;
  BinaryMetrics exclude_all;
  std::size_t gold_items = 0;
  std::optional<AgreementReport> agreement;
};

MetricsReport evaluate(const PredictionSet& predictions, const GoldSet& gold);

nlohmann::json to_json(const MetricsReport& r);
/// Terminal rendering: the confusion matrix in the row/column layout of the
/// published tables, then the metric blocks.
std::string to_text(const MetricsReport& r);
/// "predictor,scheme,metric,value" rows for external plotting; undefined
/// values are written as empty fields.
void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports, bool header = true);

}  // namespace slangscan
