#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "topicopt/common.hpp"
#include "topicopt/corpus.hpp"

namespace topicopt {

/// Ranked term lists, one per topic, optionally with the score each term
/// was ranked by.
struct TopicSet {
  std::vector<std::vector<std::string>> topics;
  std::vector<std::vector<double>> scores;  // empty, or same shape as topics

  std::size_t size() const { return topics.size(); }
  /// Throws DataError on a duplicate term inside a topic or a shape mismatch.
  void validate() const;
};

/// Indices of the n largest values, descending, ties by ascending index.
/// Values <= floor are skipped.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t n,
                                     double floor = -std::numeric_limits<double>::infinity());

/// Builds a TopicSet from a topics x V weight matrix.
TopicSet topics_from_weights(const Matrix& weights, const Vocabulary& vocab, std::size_t n,
                             double floor = -std::numeric_limits<double>::infinity());

/// Boolean sliding-window document frequencies for a fixed term set.
///
/// Each token stream is cut into windows of window_size consecutive tokens
/// (stride 1, no windows running past the end; a stream shorter than the
/// window is one window). A term is present in a window when all of its
/// tokens lie inside it, so "circular_economy" needs both words adjacent
/// inside the window.
class CooccurrenceStats {
public:
  CooccurrenceStats(std::size_t window_size, std::uint64_t n_windows, std::vector<std::string> terms,
                    std::vector<std::uint64_t> term_windows,
                    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> pair_windows);

  std::size_t window_size() const { return window_size_; }
  std::uint64_t n_windows() const { return n_windows_; }
  const std::vector<std::string>& terms() const { return terms_; }
  bool contains(std::string_view term) const;

  /// Throws DataError for an unknown term.
  double p(std::string_view term) const;
  double p(std::string_view a, std::string_view b) const;
  std::uint64_t windows_with(std::string_view term) const;
  std::uint64_t windows_with(std::string_view a, std::string_view b) const;

private:
  std::uint32_t index_of(std::string_view term) const;

  std::size_t window_size_;
  std::uint64_t n_windows_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::uint64_t> term_windows_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> pair_windows_;
};

/// Terms not present in `terms` are not counted. Throws DataError on an empty
/// corpus and ConfigError for window_size < 2.
CooccurrenceStats cooccurrence_counts(const Corpus& corpus, const std::vector<std::string>& terms,
                                      std::size_t window_size = 10);

/// NPMI = log(P(a,b) / (P(a)P(b))) / -log P(a,b). A zero joint probability is
/// clipped to epsilon; a joint probability of 1 gives 1.
double npmi(const CooccurrenceStats& stats, std::string_view a, std::string_view b, double epsilon = 1e-10);

struct CoherenceResult {
  double overall = 0.0;
  /// Empty for topics that had fewer than two usable terms.
  std::vector<std::optional<double>> per_topic;
  Warnings warnings;
};

/// C_NPMI: per topic, the mean NPMI over all pairs of its terms; overall is
/// the unweighted mean over the topics that could be scored. Terms unknown
/// to the statistics (or never seen) are dropped with a warning.
CoherenceResult coherence_cnpmi(const TopicSet& topics, const CooccurrenceStats& stats, double epsilon = 1e-10);

/// Truncated rank-biased overlap (1-p) sum_{k=1..N} p^(k-1) |A@k & B@k| / k.
/// Lists of different length are compared at the shorter depth.
double rbo(const std::vector<std::string>& a, const std::vector<std::string>& b, double p, Warnings* warnings = nullptr);

struct DiversityConfig {
  double p = 0.9;
  std::size_t depth = 10;
};

/// Mean inverted RBO over all unordered topic pairs. Needs >= 2 topics.
double diversity(const TopicSet& topics, const DiversityConfig& config = {}, Warnings* warnings = nullptr);

struct PerplexityConfig {
  double epsilon = 1e-10;
};

/// exp(-sum n[d][w] log max(P(w|d), eps) / sum n[d][w]) with
/// P(w|d) = sum_k doc_topic[d][k] * topic_word[k][w].
double perplexity(const Matrix& doc_topic, const Matrix& topic_word, const DocTermMatrix& matrix,
                  const PerplexityConfig& config = {});

struct MetricConfig {
  std::size_t window_size = 10;
  std::size_t top_n = 10;
  DiversityConfig diversity;
  PerplexityConfig perplexity;
};

struct MetricReport {
  double coherence = 0.0;
  std::vector<std::optional<double>> per_topic_coherence;
  double diversity = 0.0;
  std::optional<double> perplexity;
  Warnings warnings;
};

/// Coherence against windows of `reference`, diversity of the topics and,
/// when both distributions are given, perplexity on `matrix`.
MetricReport evaluate_topics(const TopicSet& topics, const Corpus& reference, const MetricConfig& config,
                             const Matrix* doc_topic = nullptr, const Matrix* topic_word = nullptr,
                             const DocTermMatrix* matrix = nullptr);

/// {coherence, diversity, per_topic_coherence, perplexity, warnings}
std::string metric_report_json(const MetricReport& report);

std::string topic_set_json(const TopicSet& topics);
/// Accepts {"topics": [[...], ...], "scores": [[...], ...]} or a bare array
/// of term lists.
TopicSet topic_set_from_json(std::string_view text);

}  // namespace topicopt
