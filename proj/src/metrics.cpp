#include "topicopt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include <json.hpp>

namespace topicopt {

using nlohmann::json;

void TopicSet::validate() const {
  if (!scores.empty() && scores.size() != topics.size()) throw DataError("topic scores do not match topics");
  for (std::size_t t = 0; t < topics.size(); ++t) {
    std::unordered_set<std::string> seen;
    for (const auto& term : topics[t])
      if (!seen.insert(term).second) throw DataError("topic " + std::to_string(t) + " repeats term '" + term + "'");
    if (!scores.empty() && scores[t].size() != topics[t].size())
      throw DataError("topic " + std::to_string(t) + " has a score count mismatch");
  }
}

std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t n, double floor) {
  std::vector<std::size_t> idx;
  idx.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > floor) idx.push_back(i);
  const std::size_t keep = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });
  idx.resize(keep);
  return idx;
}

TopicSet topics_from_weights(const Matrix& weights, const Vocabulary& vocab, std::size_t n, double floor) {
  if (weights.cols() != vocab.size()) throw DataError("weight matrix width does not match the vocabulary");
  TopicSet out;
  for (std::size_t k = 0; k < weights.rows(); ++k) {
    std::vector<std::string> terms;
    std::vector<double> scores;
    for (std::size_t w : top_indices(weights.row(k), n, floor)) {
      terms.push_back(vocab.term(w));
      scores.push_back(weights(k, w));
    }
    out.topics.push_back(std::move(terms));
    out.scores.push_back(std::move(scores));
  }
  return out;
}

// ---------------------------------------------------------------------------
// co-occurrence

CooccurrenceStats::CooccurrenceStats(std::size_t window_size, std::uint64_t n_windows, std::vector<std::string> terms,
                                     std::vector<std::uint64_t> term_windows,
                                     std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> pair_windows)
    : window_size_(window_size),
      n_windows_(n_windows),
      terms_(std::move(terms)),
      term_windows_(std::move(term_windows)),
      pair_windows_(std::move(pair_windows)) {
  for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
}

bool CooccurrenceStats::contains(std::string_view term) const { return index_.contains(std::string(term)); }

std::uint32_t CooccurrenceStats::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) throw DataError("term '" + std::string(term) + "' is not in the co-occurrence statistics");
  return it->second;
}

std::uint64_t CooccurrenceStats::windows_with(std::string_view term) const { return term_windows_[index_of(term)]; }

std::uint64_t CooccurrenceStats::windows_with(std::string_view a, std::string_view b) const {
  auto i = index_of(a), j = index_of(b);
  if (i == j) return term_windows_[i];
  if (i > j) std::swap(i, j);
  auto it = pair_windows_.find({i, j});
  return it == pair_windows_.end() ? 0 : it->second;
}

double CooccurrenceStats::p(std::string_view term) const {
  return n_windows_ == 0 ? 0.0 : static_cast<double>(windows_with(term)) / static_cast<double>(n_windows_);
}

double CooccurrenceStats::p(std::string_view a, std::string_view b) const {
  return n_windows_ == 0 ? 0.0 : static_cast<double>(windows_with(a, b)) / static_cast<double>(n_windows_);
}

CooccurrenceStats cooccurrence_counts(const Corpus& corpus, const std::vector<std::string>& terms,
                                      std::size_t window_size) {
  if (window_size < 2) throw ConfigError("co-occurrence window must be >= 2");
  if (corpus.empty()) throw DataError("co-occurrence statistics need a non-empty reference corpus");

  std::vector<std::string> uniq;
  std::unordered_map<std::string, std::uint32_t> index;
  std::size_t max_order = 1;
  for (const auto& t : terms) {
    if (index.contains(t)) continue;
    index.emplace(t, static_cast<std::uint32_t>(uniq.size()));
    uniq.push_back(t);
    max_order = std::max<std::size_t>(max_order, 1 + static_cast<std::size_t>(std::count(t.begin(), t.end(), '_')));
  }

  struct Occurrence {
    std::size_t pos;
    std::size_t len;
    std::uint32_t term;
  };

  std::vector<std::uint64_t> term_windows(uniq.size(), 0);
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> pair_windows;
  std::uint64_t n_windows = 0;
  std::vector<Occurrence> occ;
  std::vector<std::uint32_t> present;

  for (const auto& doc : corpus.docs) {
    const auto& tok = doc.tokens;
    const std::size_t len = tok.size();
    if (len == 0) continue;
    occ.clear();
    for (std::size_t p = 0; p < len; ++p) {
      std::string gram;
      for (std::size_t n = 1; n <= max_order && p + n <= len; ++n) {
        if (n > 1) gram += '_';
        gram += tok[p + n - 1];
        if (auto it = index.find(gram); it != index.end()) occ.push_back({p, n, it->second});
      }
    }
    const std::size_t width = std::min(window_size, len);
    const std::size_t n_starts = len - width + 1;
    n_windows += n_starts;
    std::size_t first = 0;  // first occurrence with pos >= start
    for (std::size_t s = 0; s < n_starts; ++s) {
      while (first < occ.size() && occ[first].pos < s) ++first;
      present.clear();
      for (std::size_t i = first; i < occ.size() && occ[i].pos < s + width; ++i)
        if (occ[i].pos + occ[i].len <= s + width) present.push_back(occ[i].term);
      std::sort(present.begin(), present.end());
      present.erase(std::unique(present.begin(), present.end()), present.end());
      for (std::size_t a = 0; a < present.size(); ++a) {
        ++term_windows[present[a]];
        for (std::size_t b = a + 1; b < present.size(); ++b) ++pair_windows[{present[a], present[b]}];
      }
    }
  }
  return CooccurrenceStats(window_size, n_windows, std::move(uniq), std::move(term_windows), std::move(pair_windows));
}

double npmi(const CooccurrenceStats& stats, std::string_view a, std::string_view b, double epsilon) {
  const double pa = stats.p(a);
  const double pb = stats.p(b);
  if (pa <= 0.0 || pb <= 0.0)
    throw DataError("NPMI undefined: term '" + std::string(pa <= 0.0 ? a : b) + "' never occurs in the reference windows");
  double pab = stats.p(a, b);
  if (pab >= 1.0) return 1.0;
  if (pab <= 0.0) pab = epsilon;
  return std::log(pab / (pa * pb)) / -std::log(pab);
}

CoherenceResult coherence_cnpmi(const TopicSet& topics, const CooccurrenceStats& stats, double epsilon) {
  CoherenceResult out;
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    std::vector<std::string_view> usable;
    for (const auto& term : topics.topics[t]) {
      if (stats.contains(term) && stats.p(term) > 0.0) {
        usable.push_back(term);
      } else {
        out.warnings.push_back("topic " + std::to_string(t) + ": term '" + term + "' absent from reference windows, dropped");
      }
    }
    if (usable.size() < 2) {
      out.warnings.push_back("topic " + std::to_string(t) + ": fewer than 2 usable terms, skipped");
      out.per_topic.push_back(std::nullopt);
      continue;
    }
    double topic_sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < usable.size(); ++i)
      for (std::size_t j = i + 1; j < usable.size(); ++j) {
        topic_sum += npmi(stats, usable[i], usable[j], epsilon);
        ++pairs;
      }
    const double c = topic_sum / static_cast<double>(pairs);
    out.per_topic.push_back(c);
    sum += c;
    ++scored;
  }
  if (scored == 0) throw DataError("coherence undefined: no topic has two terms present in the reference corpus");
  out.overall = sum / static_cast<double>(scored);
  return out;
}

// ---------------------------------------------------------------------------
// diversity

double rbo(const std::vector<std::string>& a, const std::vector<std::string>& b, double p, Warnings* warnings) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("RBO persistence must lie in (0, 1)");
  if (a.size() != b.size())
    warn(warnings, "RBO lists of depth " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                       " compared at depth " + std::to_string(std::min(a.size(), b.size())));
  const std::size_t depth = std::min(a.size(), b.size());
  std::unordered_set<std::string_view> seen_a, seen_b;
  std::size_t overlap = 0;
  double sum = 0.0;
  double weight = 1.0;  // p^(k-1)
  for (std::size_t k = 1; k <= depth; ++k) {
    const std::string& x = a[k - 1];
    const std::string& y = b[k - 1];
    if (x == y) {
      ++overlap;
    } else {
      if (seen_b.contains(x)) ++overlap;
      if (seen_a.contains(y)) ++overlap;
    }
    seen_a.insert(x);
    seen_b.insert(y);
    sum += weight * static_cast<double>(overlap) / static_cast<double>(k);
    weight *= p;
  }
  return (1.0 - p) * sum;
}

double diversity(const TopicSet& topics, const DiversityConfig& config, Warnings* warnings) {
  if (topics.size() < 2) throw DataError("diversity needs at least 2 topics");
  if (config.depth < 1) throw ConfigError("diversity depth must be >= 1");
  std::vector<std::vector<std::string>> lists;
  for (const auto& t : topics.topics)
    lists.emplace_back(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(std::min(t.size(), config.depth)));
  double sum = 0.0;
  const std::size_t n = lists.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += 1.0 - rbo(lists[i], lists[j], config.p, warnings);
  return 2.0 * sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

// ---------------------------------------------------------------------------
// perplexity

double perplexity(const Matrix& doc_topic, const Matrix& topic_word, const DocTermMatrix& matrix,
                  const PerplexityConfig& config) {
  if (!(config.epsilon > 0.0)) throw ConfigError("perplexity epsilon must be > 0");
  if (doc_topic.rows() != matrix.n_docs() || doc_topic.cols() != topic_word.rows() ||
      topic_word.cols() != matrix.n_terms())
    throw DataError("perplexity: doc-topic " + std::to_string(doc_topic.rows()) + "x" +
                    std::to_string(doc_topic.cols()) + ", topic-word " + std::to_string(topic_word.rows()) + "x" +
                    std::to_string(topic_word.cols()) + " and matrix " + std::to_string(matrix.n_docs()) + "x" +
                    std::to_string(matrix.n_terms()) + " are inconsistent");
  double log_sum = 0.0;
  std::uint64_t tokens = 0;
  for (std::size_t d = 0; d < matrix.n_docs(); ++d) {
    for (const auto& e : matrix.row(d)) {
      double p = 0.0;
      for (std::size_t k = 0; k < topic_word.rows(); ++k) p += doc_topic(d, k) * topic_word(k, e.term);
      log_sum += e.count * std::log(std::max(p, config.epsilon));
      tokens += e.count;
    }
  }
  if (tokens == 0) throw DataError("perplexity undefined: no tokens");
  return std::exp(-log_sum / static_cast<double>(tokens));
}

// ---------------------------------------------------------------------------

MetricReport evaluate_topics(const TopicSet& topics, const Corpus& reference, const MetricConfig& config,
                             const Matrix* doc_topic, const Matrix* topic_word, const DocTermMatrix* matrix) {
  topics.validate();
  std::vector<std::string> terms;
  for (const auto& t : topics.topics)
    for (std::size_t i = 0; i < std::min(t.size(), config.top_n); ++i) terms.push_back(t[i]);

  TopicSet truncated;
  for (const auto& t : topics.topics)
    truncated.topics.emplace_back(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(std::min(t.size(), config.top_n)));

  MetricReport report;
  const auto stats = cooccurrence_counts(reference, terms, config.window_size);
  auto coh = coherence_cnpmi(truncated, stats, config.perplexity.epsilon);
  report.coherence = coh.overall;
  report.per_topic_coherence = std::move(coh.per_topic);
  report.warnings = std::move(coh.warnings);
  report.diversity = diversity(truncated, config.diversity, &report.warnings);
  if (doc_topic != nullptr && topic_word != nullptr && matrix != nullptr)
    report.perplexity = perplexity(*doc_topic, *topic_word, *matrix, config.perplexity);
  return report;
}

std::string metric_report_json(const MetricReport& report) {
  json j;
  j["coherence"] = report.coherence;
  j["diversity"] = report.diversity;
  j["perplexity"] = report.perplexity ? json(*report.perplexity) : json(nullptr);
  json per = json::array();
  for (const auto& c : report.per_topic_coherence) per.push_back(c ? json(*c) : json(nullptr));
  j["per_topic_coherence"] = per;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::string topic_set_json(const TopicSet& topics) {
  json j;
  j["topics"] = topics.topics;
  j["scores"] = topics.scores;
  return j.dump(2) + "\n";
}

TopicSet topic_set_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed topic set: " + std::string(e.what()), 1, e.byte);
  }
  TopicSet out;
  try {
    if (j.is_array()) {
      out.topics = j.get<std::vector<std::vector<std::string>>>();
    } else {
      out.topics = j.at("topics").get<std::vector<std::vector<std::string>>>();
      if (j.contains("scores")) out.scores = j.at("scores").get<std::vector<std::vector<double>>>();
    }
  } catch (const json::exception& e) {
    throw DataError("invalid topic set: " + std::string(e.what()));
  }
  out.validate();
  return out;
}

}  // namespace topicopt
