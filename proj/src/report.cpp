#include "topicopt/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "topicopt/text_io.hpp"

namespace topicopt {

namespace {

double cell_double(const std::string& cell, std::size_t line, std::size_t col) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw ParseError("expected a number, got '" + cell + "'", line, col);
  return v;
}

std::size_t cell_index(const std::string& cell, std::size_t line, std::size_t col) {
  std::size_t v = 0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw ParseError("expected a non-negative integer, got '" + cell + "'", line, col);
  return v;
}

/// Parsed rows without the header, each checked to have `width` cells.
std::vector<CsvRow> body_rows(std::string_view text, const CsvRow& header) {
  auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != header) throw ParseError("unexpected CSV header", 1, 1);
  rows.erase(rows.begin());
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].size() != header.size()) throw ParseError("wrong number of fields", i + 2, 1);
  return rows;
}

std::int64_t bin_start(std::int64_t t, TimeBin bin) {
  const CivilDate d = civil_from_epoch(t);
  return bin == TimeBin::year ? epoch_from_civil(d.year, 1, 1) : epoch_from_civil(d.year, d.month, 1);
}

std::int64_t next_bin(std::int64_t start, TimeBin bin) {
  const CivilDate d = civil_from_epoch(start);
  if (bin == TimeBin::year) return epoch_from_civil(d.year + 1, 1, 1);
  return d.month == 12 ? epoch_from_civil(d.year + 1, 1, 1) : epoch_from_civil(d.year, d.month + 1, 1);
}

std::string bin_label(std::int64_t start, TimeBin bin) {
  const CivilDate d = civil_from_epoch(start);
  std::string year = std::to_string(d.year);
  if (bin == TimeBin::year) return year;
  return year + (d.month < 10 ? "-0" : "-") + std::to_string(d.month);
}

}  // namespace

std::string topic_table_csv(const TopicSet& topics, std::size_t n) {
  std::vector<CsvRow> rows;
  for (std::size_t k = 0; k < topics.size(); ++k)
    for (std::size_t r = 0; r < std::min(n, topics.topics[k].size()); ++r)
      rows.push_back({std::to_string(k), std::to_string(r), topics.topics[k][r]});
  return to_csv({"topic", "rank", "term"}, rows);
}

TopicSet topic_table_from_csv(std::string_view text) {
  const auto rows = body_rows(text, {"topic", "rank", "term"});
  TopicSet out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t k = cell_index(rows[i][0], i + 2, 1);
    const std::size_t r = cell_index(rows[i][1], i + 2, 2);
    if (k >= out.topics.size()) out.topics.resize(k + 1);
    if (r != out.topics[k].size()) throw ParseError("ranks must be consecutive from 0", i + 2, 2);
    out.topics[k].push_back(rows[i][2]);
  }
  return out;
}

TimeBin time_bin_from_string(std::string_view name) {
  if (name == "year") return TimeBin::year;
  if (name == "month") return TimeBin::month;
  throw ConfigError("unknown time bin '" + std::string(name) + "' (expected year or month)");
}

std::string_view to_string(TimeBin bin) { return bin == TimeBin::year ? "year" : "month"; }

TimeSeriesReport topics_over_time(const Corpus& corpus, const Matrix& doc_topic, TimeBin bin) {
  TimeSeriesReport out;
  out.bin = bin;
  if (doc_topic.rows() != corpus.size())
    throw DataError("doc_topic has " + std::to_string(doc_topic.rows()) + " rows for " +
                    std::to_string(corpus.size()) + " documents");
  out.counts.assign(doc_topic.cols(), {});
  if (corpus.empty()) return out;
  if (doc_topic.cols() == 0) throw DataError("doc_topic has no topics");

  std::int64_t lo = 0, hi = 0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    if (!corpus.docs[d].timestamp) throw DataError("document " + std::to_string(d) + " has no timestamp");
    const std::int64_t t = *corpus.docs[d].timestamp;
    if (d == 0 || t < lo) lo = t;
    if (d == 0 || t > hi) hi = t;
  }
  for (std::int64_t s = bin_start(lo, bin); s <= hi; s = next_bin(s, bin)) out.bin_starts.push_back(s);
  for (auto& row : out.counts) row.assign(out.bin_starts.size(), 0);

  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto r = doc_topic.row(d);
    const std::size_t k = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    const std::int64_t s = bin_start(*corpus.docs[d].timestamp, bin);
    const auto it = std::lower_bound(out.bin_starts.begin(), out.bin_starts.end(), s);
    ++out.counts[k][static_cast<std::size_t>(it - out.bin_starts.begin())];
  }
  return out;
}

std::string time_series_csv(const TimeSeriesReport& report) {
  std::vector<CsvRow> rows;
  for (std::size_t k = 0; k < report.counts.size(); ++k)
    for (std::size_t b = 0; b < report.bin_starts.size(); ++b)
      rows.push_back({std::to_string(k), bin_label(report.bin_starts[b], report.bin),
                      std::to_string(report.counts[k][b])});
  return to_csv({"topic", "bin", "count"}, rows);
}

TimeSeriesReport time_series_from_csv(std::string_view text, TimeBin bin) {
  const auto rows = body_rows(text, {"topic", "bin", "count"});
  TimeSeriesReport out;
  out.bin = bin;
  std::map<std::string, std::int64_t> starts;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string& label = rows[i][1];
    const auto t = parse_timestamp(bin == TimeBin::year ? label + "-01-01" : label + "-01");
    if (!t) throw ParseError("bad time bin '" + label + "'", i + 2, 2);
    starts[label] = *t;
  }
  for (const auto& [label, t] : starts) out.bin_starts.push_back(t);
  std::sort(out.bin_starts.begin(), out.bin_starts.end());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t k = cell_index(rows[i][0], i + 2, 1);
    if (k >= out.counts.size()) out.counts.resize(k + 1, std::vector<std::size_t>(out.bin_starts.size(), 0));
    const auto it = std::lower_bound(out.bin_starts.begin(), out.bin_starts.end(), starts[rows[i][1]]);
    out.counts[k][static_cast<std::size_t>(it - out.bin_starts.begin())] = cell_index(rows[i][2], i + 2, 3);
  }
  return out;
}

std::vector<ScoredTerms> word_score_bars(const TopicSet& topics, std::size_t n) {
  topics.validate();
  if (topics.scores.size() != topics.topics.size()) throw DataError("word score bars need term scores");
  std::vector<ScoredTerms> out;
  for (std::size_t k = 0; k < topics.size(); ++k) {
    ScoredTerms bars;
    for (std::size_t i = 0; i < topics.topics[k].size(); ++i) bars.emplace_back(topics.topics[k][i], topics.scores[k][i]);
    std::stable_sort(bars.begin(), bars.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (bars.size() > n) bars.resize(n);
    out.push_back(std::move(bars));
  }
  return out;
}

std::string word_score_bars_csv(const std::vector<ScoredTerms>& bars) {
  std::vector<CsvRow> rows;
  for (std::size_t k = 0; k < bars.size(); ++k)
    for (std::size_t r = 0; r < bars[k].size(); ++r)
      rows.push_back({std::to_string(k), std::to_string(r), bars[k][r].first, format_double(bars[k][r].second)});
  return to_csv({"topic", "rank", "term", "score"}, rows);
}

Matrix topic_similarity(const Matrix& weights) {
  const std::size_t k = weights.rows();
  if (k < 2) throw DataError("topic similarity needs at least 2 topics");
  std::vector<double> norm(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (double v : weights.row(i)) norm[i] += v * v;
    norm[i] = std::sqrt(norm[i]);
    if (norm[i] == 0.0) throw DataError("topic " + std::to_string(i) + " has an all-zero weight vector");
  }
  Matrix s(k, k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    s(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto a = weights.row(i), b = weights.row(j);
      const double c = std::clamp(std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (norm[i] * norm[j]), -1.0, 1.0);
      s(i, j) = c;
      s(j, i) = c;
    }
  }
  return s;
}

std::string similarity_csv(const Matrix& similarity) {
  const std::size_t k = similarity.rows();
  if (similarity.cols() != k) throw std::logic_error("similarity matrix is not square");
  CsvRow header{"topic"};
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < k; ++i) {
    header.push_back(std::to_string(i));
    if (std::abs(similarity(i, i) - 1.0) > 1e-9) throw std::logic_error("similarity diagonal is not 1");
    CsvRow row{std::to_string(i)};
    for (std::size_t j = 0; j < k; ++j) {
      if (similarity(i, j) != similarity(j, i)) throw std::logic_error("similarity matrix is not symmetric");
      if (!(similarity(i, j) >= -1.0 && similarity(i, j) <= 1.0)) throw std::logic_error("similarity outside [-1, 1]");
      row.push_back(format_double(similarity(i, j)));
    }
    rows.push_back(std::move(row));
  }
  return to_csv(header, rows);
}

Matrix similarity_from_csv(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty() || rows.front().empty() || rows.front()[0] != "topic") throw ParseError("unexpected CSV header", 1, 1);
  const std::size_t k = rows.front().size() - 1;
  if (rows.size() != k + 1) throw ParseError("similarity CSV is not square", rows.size(), 1);
  Matrix s(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    if (rows[i + 1].size() != k + 1) throw ParseError("wrong number of fields", i + 2, 1);
    for (std::size_t j = 0; j < k; ++j) s(i, j) = cell_double(rows[i + 1][j + 1], i + 2, j + 2);
  }
  return s;
}

std::vector<ScatterRow> doc_scatter(const Matrix& reduced, const std::vector<std::size_t>& assignments) {
  if (reduced.cols() != 2)
    throw DataError("document scatter needs 2-D coordinates, got " + std::to_string(reduced.cols()) +
                    "-D; re-reduce with n_components=2");
  if (reduced.rows() != assignments.size())
    throw DataError("scatter has " + std::to_string(reduced.rows()) + " points and " +
                    std::to_string(assignments.size()) + " assignments");
  std::vector<ScatterRow> out;
  for (std::size_t d = 0; d < reduced.rows(); ++d) out.push_back({d, reduced(d, 0), reduced(d, 1), assignments[d]});
  return out;
}

std::string doc_scatter_csv(const std::vector<ScatterRow>& rows) {
  std::vector<CsvRow> out;
  for (const auto& r : rows)
    out.push_back({std::to_string(r.doc_id), format_double(r.x), format_double(r.y), std::to_string(r.topic)});
  return to_csv({"doc_id", "x", "y", "topic"}, out);
}

std::vector<ScatterRow> doc_scatter_from_csv(std::string_view text) {
  const auto rows = body_rows(text, {"doc_id", "x", "y", "topic"});
  std::vector<ScatterRow> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.push_back({cell_index(rows[i][0], i + 2, 1), cell_double(rows[i][1], i + 2, 2), cell_double(rows[i][2], i + 2, 3),
                   cell_index(rows[i][3], i + 2, 4)});
  return out;
}

ScoredTerms wordcloud_weights(const TopicSet& topics) {
  topics.validate();
  if (topics.scores.size() != topics.topics.size()) throw DataError("word cloud weights need term scores");
  std::map<std::string, double> best;
  for (std::size_t k = 0; k < topics.size(); ++k)
    for (std::size_t i = 0; i < topics.topics[k].size(); ++i) {
      const double v = topics.scores[k][i];
      if (!(v >= 0.0)) throw DataError("word cloud weight of '" + topics.topics[k][i] + "' is negative");
      auto [it, fresh] = best.emplace(topics.topics[k][i], v);
      if (!fresh) it->second = std::max(it->second, v);
    }
  double top = 0.0;
  for (const auto& [term, v] : best) top = std::max(top, v);
  if (top <= 0.0) throw DataError("word cloud needs at least one positive weight");
  ScoredTerms out;
  for (const auto& [term, v] : best) out.emplace_back(term, v / top);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::string wordcloud_csv(const ScoredTerms& weights) {
  std::vector<CsvRow> rows;
  for (const auto& [term, w] : weights) rows.push_back({term, format_double(w)});
  return to_csv({"term", "weight"}, rows);
}

ScoredTerms scored_terms_from_csv(std::string_view text) {
  const auto rows = body_rows(text, {"term", "weight"});
  ScoredTerms out;
  for (std::size_t i = 0; i < rows.size(); ++i) out.emplace_back(rows[i][0], cell_double(rows[i][1], i + 2, 2));
  return out;
}

}  // namespace topicopt
