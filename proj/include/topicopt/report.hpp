#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topicopt/common.hpp"
#include "topicopt/corpus.hpp"
#include "topicopt/metrics.hpp"

namespace topicopt {

// Emitters for plot data. CSV output has a header row and RFC-4180 quoting;
// numbers are written with format_double so they parse back exactly.

/// Long format: one row per (topic, rank, term), ranks from 0. At most n
/// terms per topic.
std::string topic_table_csv(const TopicSet& topics, std::size_t n);
TopicSet topic_table_from_csv(std::string_view text);

enum class TimeBin { year, month };

TimeBin time_bin_from_string(std::string_view name);
std::string_view to_string(TimeBin bin);

struct TimeSeriesReport {
  TimeBin bin = TimeBin::year;
  /// Contiguous bin starts (epoch seconds) from the earliest to the latest
  /// document.
  std::vector<std::int64_t> bin_starts;
  /// counts[topic][bin]
  std::vector<std::vector<std::size_t>> counts;
};

/// Each document counts once, for its argmax topic (lowest index on ties).
/// A document without a timestamp or a row-count mismatch is a DataError.
TimeSeriesReport topics_over_time(const Corpus& corpus, const Matrix& doc_topic, TimeBin bin);

/// topic,bin,count with bin as "YYYY" or "YYYY-MM".
std::string time_series_csv(const TimeSeriesReport& report);
TimeSeriesReport time_series_from_csv(std::string_view text, TimeBin bin);

using ScoredTerms = std::vector<std::pair<std::string, double>>;

/// Per topic, the top n (term, score) pairs by descending score; equal
/// scores keep their input order. Needs scores.
std::vector<ScoredTerms> word_score_bars(const TopicSet& topics, std::size_t n);
/// topic,rank,term,score
std::string word_score_bars_csv(const std::vector<ScoredTerms>& bars);

/// Cosine similarity between weight rows. Fewer than 2 rows or an all-zero
/// row is a DataError.
Matrix topic_similarity(const Matrix& weights);
/// Square CSV, header "topic,0,1,...". Throws std::logic_error when the
/// matrix is not symmetric with a unit diagonal.
std::string similarity_csv(const Matrix& similarity);
Matrix similarity_from_csv(std::string_view text);

struct ScatterRow {
  std::size_t doc_id = 0;
  double x = 0.0;
  double y = 0.0;
  std::size_t topic = 0;
};

/// One row per document. Coordinates must be 2-D.
std::vector<ScatterRow> doc_scatter(const Matrix& reduced, const std::vector<std::size_t>& assignments);
/// doc_id,x,y,topic
std::string doc_scatter_csv(const std::vector<ScatterRow>& rows);
std::vector<ScatterRow> doc_scatter_from_csv(std::string_view text);

/// Every scored term across topics, a term seen twice keeping its larger
/// score, divided by the overall maximum. Sorted by weight descending, then
/// term. Negative scores or no positive score are a DataError.
ScoredTerms wordcloud_weights(const TopicSet& topics);
/// term,weight
std::string wordcloud_csv(const ScoredTerms& weights);
ScoredTerms scored_terms_from_csv(std::string_view text);

}  // namespace topicopt
