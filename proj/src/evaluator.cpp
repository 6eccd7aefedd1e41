#include "slangscan/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "slangscan/error.hpp"

namespace slangscan {

// ---------------------------------------------------------------------------
// Gold labels

void GoldSet::add(std::string post_id, Label label) {
  if (!is_semantic(label)) throw ContractError("gold labels must be semantic (got " + std::string(to_string(label)) + ")");
  if (!index_.emplace(post_id, items_.size()).second) {
    throw ContractError("gold set already has a label for '" + post_id + "'");
  }
  items_.push_back(Item{std::move(post_id), label});
}

const Label* GoldSet::find(std::string_view post_id) const {
  auto it = index_.find(std::string(post_id));
  return it == index_.end() ? nullptr : &items_[it->second].label;
}

namespace {

std::string unquote(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      out.push_back(s[i]);
      if (s[i] == '"' && i + 1 < s.size() && s[i + 1] == '"') ++i;
    }
    return out;
  }
  return s;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

GoldSet read_gold_csv(std::istream& in) {
  GoldSet gold;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw IngestError("gold line " + std::to_string(line_no) + ": expected post_id,label");
    std::string id = unquote(line.substr(0, comma));
    std::string label_text = unquote(line.substr(comma + 1));
    if (line_no == 1 && id == "post_id") continue;
    auto label = parse_label(label_text);
    if (!label || !is_semantic(*label)) {
      throw IngestError("gold line " + std::to_string(line_no) + ": unknown label '" + label_text + "'");
    }
    try {
      gold.add(std::move(id), *label);
    } catch (const ContractError& e) {
      throw IngestError("gold line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return gold;
}

GoldSet read_gold_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open gold file " + path.string());
  return read_gold_csv(in);
}

void write_gold_csv(std::ostream& out, const GoldSet& gold) {
  out << "post_id,label\n";
  for (const auto& item : gold.items()) out << csv_field(item.post_id) << ',' << to_string(item.label) << '\n';
}

// ---------------------------------------------------------------------------
// Confusion matrix

ConfusionMatrix3 ConfusionMatrix3::from_rows(std::span<const std::array<std::size_t, 3>> rows) {
  if (rows.size() > 5) throw ContractError("a confusion matrix has at most five rows");
  ConfusionMatrix3 cm;
  for (std::size_t r = 0; r < rows.size(); ++r) cm.counts_[r] = rows[r];
  return cm;
}

void ConfusionMatrix3::add(Label predicted, Label gold, std::size_t n) {
  if (!is_semantic(gold)) throw ContractError("gold label must be semantic");
  counts_[index_of(predicted)][index_of(gold)] += n;
}

void ConfusionMatrix3::add_unlabeled(Label predicted, std::size_t n) { unlabeled_[index_of(predicted)] += n; }

std::size_t ConfusionMatrix3::at(Label predicted, Label gold) const {
  if (!is_semantic(gold)) throw ContractError("gold label must be semantic");
  return counts_[index_of(predicted)][index_of(gold)];
}

std::size_t ConfusionMatrix3::unlabeled_total() const noexcept {
  return std::accumulate(unlabeled_.begin(), unlabeled_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix3::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts_) t += row[0] + row[1] + row[2];
  return t;
}

std::size_t ConfusionMatrix3::row_total(Label predicted) const {
  const auto& row = counts_[index_of(predicted)];
  return row[0] + row[1] + row[2];
}

std::size_t ConfusionMatrix3::column_total(Label gold) const {
  std::size_t t = 0;
  for (const auto& row : counts_) t += row[index_of(gold)];
  return t;
}

ConfusionMatrix3 ConfusionMatrix3::folded() const {
  ConfusionMatrix3 out = *this;
  const auto neg = index_of(Label::NotOpioidRelated);
  for (Label err : {Label::ContentRestrictionError, Label::ApiError}) {
    for (std::size_t c = 0; c < 3; ++c) {
      out.counts_[neg][c] += out.counts_[index_of(err)][c];
      out.counts_[index_of(err)][c] = 0;
    }
    out.unlabeled_[neg] += out.unlabeled_[index_of(err)];
    out.unlabeled_[index_of(err)] = 0;
  }
  return out;
}

ConfusionMatrix3 confusion(const PredictionSet& predictions, const GoldSet& gold) {
  ConfusionMatrix3 cm;
  std::vector<std::string> missing;
  for (const auto& item : gold.items()) {
    const Prediction* p = predictions.find(item.post_id);
    if (p == nullptr) {
      missing.push_back(item.post_id);
      continue;
    }
    cm.add(p->reported(), item.label);
  }
  if (!missing.empty()) throw MissingPredictionError(std::move(missing));
  for (const auto& p : predictions.entries()) {
    if (gold.find(p.post_id) == nullptr) cm.add_unlabeled(p.reported());
  }
  return cm;
}

// ---------------------------------------------------------------------------
// Binary metrics

bool binarize(Label label) {
  switch (label) {
    case Label::OpioidRelated: return true;
    case Label::NotOpioidRelated:
    case Label::Unsure: return false;
    default: throw ContractError("cannot binarize error label " + std::string(to_string(label)));
  }
}

BinaryCounts binary_counts(const ConfusionMatrix3& cm) {
  BinaryCounts c;
  for (Label pred : kAllLabels) {
    const bool pred_pos = pred == Label::OpioidRelated;
    for (Label gold : kSemanticLabels) {
      const std::size_t n = cm.at(pred, gold);
      const bool gold_pos = binarize(gold);
      if (pred_pos && gold_pos) c.tp += n;
      else if (pred_pos) c.fp += n;
      else if (gold_pos) c.fn += n;
      else c.tn += n;
    }
  }
  return c;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> harmonic(std::optional<double> p, std::optional<double> r) {
  if (!p || !r) return std::nullopt;
  if (*p + *r == 0.0) return 0.0;
  return 2.0 * *p * *r / (*p + *r);
}

}  // namespace

BinaryMetrics binary_metrics(const BinaryCounts& c) {
  BinaryMetrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = harmonic(m.precision, m.recall);
  return m;
}

BinaryMetrics binary_metrics(const ConfusionMatrix3& cm) { return binary_metrics(binary_counts(cm)); }

BinaryMetrics binary_metrics_from_pairs(std::span<const Label> predicted, std::span<const Label> gold) {
  if (predicted.size() != gold.size()) throw ContractError("label sequences differ in length");
  BinaryCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == Label::OpioidRelated;
    const bool g = binarize(gold[i]);
    (p ? (g ? c.tp : c.fp) : (g ? c.fn : c.tn)) += 1;
  }
  return binary_metrics(c);
}

MacroMetrics macro_metrics(const ConfusionMatrix3& raw) {
  const ConfusionMatrix3 cm = raw.folded();
  MacroMetrics m;
  std::size_t diagonal = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const Label cls = kSemanticLabels[k];
    const std::size_t hit = cm.at(cls, cls);
    diagonal += hit;
    ClassMetrics& pc = m.per_class[k];
    pc.precision = ratio(hit, cm.row_total(cls));
    pc.recall = ratio(hit, cm.column_total(cls));
    pc.f1 = harmonic(pc.precision, pc.recall);
    m.macro_precision += pc.precision.value_or(0.0) / 3.0;
    m.macro_recall += pc.recall.value_or(0.0) / 3.0;
    m.macro_f1 += pc.f1.value_or(0.0) / 3.0;
  }
  m.accuracy = ratio(diagonal, cm.total());
  return m;
}

std::string_view to_string(Baseline b) noexcept {
  return b == Baseline::IncludeAll ? "include_all" : "exclude_all";
}

BinaryMetrics baseline(Baseline kind, const GoldSet& gold) {
  if (gold.empty()) throw ContractError("baseline needs a nonempty gold set");
  BinaryCounts c;
  for (const auto& item : gold.items()) {
    const bool g = binarize(item.label);
    if (kind == Baseline::IncludeAll) (g ? c.tp : c.fp) += 1;
    else (g ? c.fn : c.tn) += 1;
  }
  return binary_metrics(c);
}

// ---------------------------------------------------------------------------
// Agreement

namespace {

void check_pair(std::span<const Label> a, std::span<const Label> b, std::size_t min_size) {
  if (a.size() != b.size()) throw ContractError("label sequences differ in length");
  if (a.size() < min_size) throw ContractError("too few items for agreement statistics");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!is_semantic(a[i]) || !is_semantic(b[i])) throw ContractError("agreement is defined on semantic labels only");
  }
}

}  // namespace

KappaResult cohens_kappa(std::span<const Label> a, std::span<const Label> b, KappaMode mode) {
  check_pair(a, b, 1);
  auto category = [mode](Label l) -> std::size_t {
    if (mode == KappaMode::Binarized) return binarize(l) ? 0 : 1;
    return index_of(l);
  };
  std::array<std::size_t, 3> count_a{}, count_b{};
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ca = category(a[i]);
    const auto cb = category(b[i]);
    ++count_a[ca];
    ++count_b[cb];
    agree += ca == cb ? 1 : 0;
  }
  KappaResult r;
  r.n = a.size();
  const double n = static_cast<double>(r.n);
  r.observed = static_cast<double>(agree) / n;
  for (std::size_t k = 0; k < 3; ++k) {
    r.chance += (static_cast<double>(count_a[k]) / n) * (static_cast<double>(count_b[k]) / n);
  }
  // p_e == 1 only when both raters use one identical category throughout.
  const bool degenerate = std::any_of(count_a.begin(), count_a.end(), [&](std::size_t c) { return c == r.n; }) &&
                          count_a == count_b;
  if (!degenerate) r.kappa = (r.observed - r.chance) / (1.0 - r.chance);
  return r;
}

int rank_value(Label label) {
  switch (label) {
    case Label::NotOpioidRelated: return 0;
    case Label::Unsure: return 1;
    case Label::OpioidRelated: return 2;
    default: throw ContractError("rank_value needs a semantic label");
  }
}

std::vector<double> average_ranks(std::span<const int> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi + 1 < order.size() && values[order[hi + 1]] == values[order[lo]]) ++hi;
    const double mean = (static_cast<double>(lo + 1) + static_cast<double>(hi + 1)) / 2.0;
    for (std::size_t k = lo; k <= hi; ++k) ranks[order[k]] = mean;
    lo = hi + 1;
  }
  return ranks;
}

namespace {

// Ranks of 0/1/2 codes from value counts alone.
void code_ranks(std::span<const Label> labels, std::vector<double>& out) {
  std::array<std::size_t, 3> count{};
  for (Label l : labels) ++count[static_cast<std::size_t>(rank_value(l))];
  std::array<double, 3> rank{};
  std::size_t below = 0;
  for (std::size_t v = 0; v < 3; ++v) {
    rank[v] = static_cast<double>(below) + (static_cast<double>(count[v]) + 1.0) / 2.0;
    below += count[v];
  }
  out.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = rank[static_cast<std::size_t>(rank_value(labels[i]))];
}

}  // namespace

std::optional<double> spearman(std::span<const Label> a, std::span<const Label> b) {
  check_pair(a, b, 2);
  thread_local std::vector<double> ra, rb;
  code_ranks(a, ra);
  code_ranks(b, rb);
  const double n = static_cast<double>(a.size());
  // Average ranks always have mean (n + 1) / 2.
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = ra[i] - mean;
    const double dy = rb[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

AgreementReport agreement(std::span<const Label> a, std::span<const Label> b) {
  AgreementReport r;
  const KappaResult k3 = cohens_kappa(a, b, KappaMode::ThreeClass);
  const KappaResult k2 = cohens_kappa(a, b, KappaMode::Binarized);
  r.n_items = a.size();
  r.kappa_3class = k3.kappa;
  r.kappa_binarized = k2.kappa;
  r.observed_3class = k3.observed;
  r.chance_3class = k3.chance;
  r.observed_binarized = k2.observed;
  r.chance_binarized = k2.chance;
  if (a.size() >= 2) r.spearman_rho = spearman(a, b);
  return r;
}

AgreementReport agreement(const GoldSet& a, const GoldSet& b) {
  std::vector<Label> la, lb;
  for (const auto& item : a.items()) {
    if (const Label* other = b.find(item.post_id)) {
      la.push_back(item.label);
      lb.push_back(*other);
    }
  }
  if (la.empty()) throw ContractError("the two annotators share no labeled items");
  return agreement(la, lb);
}

namespace {

nlohmann::json opt(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json to_json(const BinaryMetrics& m) {
  return nlohmann::json{{"accuracy", opt(m.accuracy)}, {"precision", opt(m.precision)}, {"recall", opt(m.recall)}, {"f1", opt(m.f1)}};
}

}  // namespace

nlohmann::json to_json(const AgreementReport& r) {
  return nlohmann::json{{"kappa_3class", opt(r.kappa_3class)},
                        {"kappa_binarized", opt(r.kappa_binarized)},
                        {"spearman_rho", opt(r.spearman_rho)},
                        {"n_items", r.n_items},
                        {"p_o_3class", r.observed_3class},
                        {"p_e_3class", r.chance_3class},
                        {"p_o_binarized", r.observed_binarized},
                        {"p_e_binarized", r.chance_binarized}};
}

// ---------------------------------------------------------------------------
// Reports

MetricsReport evaluate(const PredictionSet& predictions, const GoldSet& gold) {
  MetricsReport r;
  r.predictor_id = predictions.predictor_id();
  r.matrix = confusion(predictions, gold);
  r.binary = binary_metrics(r.matrix);
  r.macro = macro_metrics(r.matrix);
  r.gold_items = gold.size();
  if (!gold.empty()) {
    r.include_all = baseline(Baseline::IncludeAll, gold);
    r.exclude_all = baseline(Baseline::ExcludeAll, gold);
  }
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json rows = nlohmann::json::object();
  nlohmann::json unlabeled = nlohmann::json::object();
  for (Label pred : kAllLabels) {
    nlohmann::json row = nlohmann::json::array();
    for (Label gold : kSemanticLabels) row.push_back(r.matrix.at(pred, gold));
    rows[std::string(to_string(pred))] = row;
    unlabeled[std::string(to_string(pred))] = r.matrix.unlabeled(pred);
  }
  nlohmann::json macro{{"accuracy", opt(r.macro.accuracy)},
                       {"macro_precision", r.macro.macro_precision},
                       {"macro_recall", r.macro.macro_recall},
                       {"macro_f1", r.macro.macro_f1}};
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& pc = r.macro.per_class[k];
    per_class[std::string(to_string(kSemanticLabels[k]))] = {
        {"precision", opt(pc.precision)}, {"recall", opt(pc.recall)}, {"f1", opt(pc.f1)}};
  }
  macro["per_class"] = per_class;
  nlohmann::json j{{"predictor_id", r.predictor_id},
                   {"gold_items", r.gold_items},
                   {"confusion",
                    {{"columns", {"opioid-related", "not-opioid-related", "unsure"}},
                     {"rows", rows},
                     {"unlabeled", unlabeled},
                     {"total", r.matrix.total()},
                     {"unlabeled_total", r.matrix.unlabeled_total()}}},
                   {"binary", to_json(r.binary)},
                   {"macro", macro},
                   {"baselines", {{"include_all", to_json(r.include_all)}, {"exclude_all", to_json(r.exclude_all)}}}};
  j["agreement"] = r.agreement ? to_json(*r.agreement) : nlohmann::json(nullptr);
  return j;
}

namespace {

std::string fmt(std::optional<double> v) {
  if (!v) return "undefined";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << *v;
  return os.str();
}

}  // namespace

std::string to_text(const MetricsReport& r) {
  std::ostringstream os;
  const bool has_unlabeled = r.matrix.unlabeled_total() > 0;
  os << "Predictor: " << (r.predictor_id.empty() ? "(unnamed)" : r.predictor_id) << '\n';
  os << std::left << std::setw(28) << "Predicted \\ Manual";
  for (Label g : kSemanticLabels) os << std::right << std::setw(20) << display_name(g);
  if (has_unlabeled) os << std::setw(12) << "Unlabeled";
  os << '\n';
  for (Label p : kAllLabels) {
    if (is_error(p) && r.matrix.row_total(p) == 0 && r.matrix.unlabeled(p) == 0) continue;
    os << std::left << std::setw(28) << display_name(p);
    for (Label g : kSemanticLabels) os << std::right << std::setw(20) << r.matrix.at(p, g);
    if (has_unlabeled) os << std::setw(12) << r.matrix.unlabeled(p);
    os << '\n';
  }
  os << "Total labeled: " << r.matrix.total();
  if (has_unlabeled) os << "  unlabeled: " << r.matrix.unlabeled_total();
  os << "\n\n";
  auto block = [&](std::string_view title, const BinaryMetrics& m) {
    os << std::left << std::setw(22) << title << " accuracy " << fmt(m.accuracy) << "  precision " << fmt(m.precision)
       << "  recall " << fmt(m.recall) << "  f1 " << fmt(m.f1) << '\n';
  };
  block("Binarized", r.binary);
  os << std::left << std::setw(22) << "Macro-averaged"
     << " accuracy " << fmt(r.macro.accuracy) << "  precision " << fmt(r.macro.macro_precision) << "  recall "
     << fmt(r.macro.macro_recall) << "  f1 " << fmt(r.macro.macro_f1) << '\n';
  block("Baseline include-all", r.include_all);
  block("Baseline exclude-all", r.exclude_all);
  if (r.agreement) {
    os << "Agreement (n=" << r.agreement->n_items << "): kappa " << fmt(r.agreement->kappa_3class)
       << "  binarized kappa " << fmt(r.agreement->kappa_binarized) << "  spearman " << fmt(r.agreement->spearman_rho)
       << '\n';
  }
  return os.str();
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports, bool header) {
  if (header) out << "predictor,scheme,metric,value\n";
  auto value = [](std::optional<double> v) {
    if (!v) return std::string{};
    std::ostringstream os;
    os << std::setprecision(6) << *v;
    return os.str();
  };
  for (const auto& r : reports) {
    const std::string who = csv_field(r.predictor_id);
    auto emit = [&](std::string_view scheme, const BinaryMetrics& m) {
      out << who << ',' << scheme << ",accuracy," << value(m.accuracy) << '\n';
      out << who << ',' << scheme << ",precision," << value(m.precision) << '\n';
      out << who << ',' << scheme << ",recall," << value(m.recall) << '\n';
      out << who << ',' << scheme << ",f1," << value(m.f1) << '\n';
    };
    emit("binarized", r.binary);
    out << who << ",macro,accuracy," << value(r.macro.accuracy) << '\n';
    out << who << ",macro,precision," << value(r.macro.macro_precision) << '\n';
    out << who << ",macro,recall," << value(r.macro.macro_recall) << '\n';
    out << who << ",macro,f1," << value(r.macro.macro_f1) << '\n';
    emit("include_all", r.include_all);
    emit("exclude_all", r.exclude_all);
  }
}

}  // namespace slangscan
