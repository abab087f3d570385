#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "topicopt/common.hpp"

namespace topicopt {

enum class Source { guardian, reddit, twitter };

std::string_view to_string(Source s);
Source source_from_string(std::string_view name);

struct RawRecord {
  Source source = Source::guardian;
  std::optional<std::string> title;
  std::string body;
  std::int64_t timestamp = 0;  // epoch seconds, UTC
  std::optional<std::string> url;
  std::string id;
};

/// A record that could not be ingested. Ingestion continues past these.
struct RecordError {
  std::size_t index = 0;  // position of the object in the input
  std::string message;
};

struct IngestResult {
  std::vector<RawRecord> records;
  std::vector<RecordError> errors;
};

/// Reads a JSON array or newline-delimited JSON dump.
///
/// Field mapping:
///   guardian  webTitle + fields.bodyText, webPublicationDate, webUrl, id
///   reddit    title + selftext, created_utc (epoch seconds), url, id
///   twitter   text, created_at, id_str (user.screen_name is ignored)
///
/// Malformed JSON throws ParseError; a record with a missing mandatory field
/// or a duplicate id is reported in `errors` and skipped.
IngestResult ingest(const std::filesystem::path& path, Source source);
IngestResult ingest_text(std::string_view text, Source source);

struct Document {
  std::vector<std::string> tokens;
  std::optional<std::int64_t> timestamp;
  Source source = Source::guardian;
  std::size_t doc_id = 0;
  /// Unprocessed body the tokens came from. Not serialised; empty after a
  /// corpus is re-read from NDJSON.
  std::string raw_text;
};

struct Corpus {
  std::vector<Document> docs;

  std::size_t size() const { return docs.size(); }
  bool empty() const { return docs.empty(); }
};

struct PreprocessOptions {
  std::size_t min_tokens = 3;
  /// Documents are truncated to this many tokens.
  std::size_t max_tokens = 5000;
};

/// Built-in English stopword list.
const std::unordered_set<std::string>& default_stopwords();
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

/// Rule-based normalisation applied to every token until it stops changing:
///
///   -sses -> -ss                         classes  -> class
///   -ies  -> -y     (word length > 4)    policies -> policy
///   -xes/-ches/-shes/-zes -> drop "es"   boxes    -> box
///   -s    -> drop   (length > 3, not after s/u/i) urls -> url, glass stays
///   -ing / -ed      only when the stem ends in a doubled consonant other
///                   than l, s or z, which is undoubled, and at least 3
///                   letters remain: running -> run, stopped -> stop.
///                   Other -ing/-ed words are left alone (recycling stays).
std::string normalize_token(std::string_view token);

/// Splits already-lowercased text into raw tokens after removing URLs
/// (scheme:// or www. prefixed), e-mail addresses and every character other
/// than a-z and 0-9. Apostrophes are deleted so contractions stay one token.
std::vector<std::string> tokenize(std::string_view text);

/// lowercase -> strip URLs -> strip e-mails -> strip punctuation -> split
/// -> normalise -> drop stopwords and tokens shorter than 2 -> truncate
/// -> drop documents with fewer than min_tokens tokens.
Corpus preprocess(const std::vector<RawRecord>& records, const std::unordered_set<std::string>& stopwords,
                  const PreprocessOptions& options = {});

/// Case-insensitive whole-phrase keyword filter.
class KeywordFilter {
public:
  explicit KeywordFilter(std::vector<std::string> phrases);

  /// The 53 circular-economy keywords used to scope the collection.
  static KeywordFilter circular_economy();

  bool matches(std::string_view text) const;
  const std::vector<std::string>& phrases() const { return phrases_; }

private:
  std::vector<std::string> phrases_;
  std::vector<std::vector<std::string>> phrase_words_;
};

/// Keeps documents whose raw body contains at least one keyword phrase
/// (matched on word boundaries, case-insensitively). Documents without raw
/// text are matched on their joined tokens. doc_ids are re-densified.
Corpus filter_by_keywords(const Corpus& corpus, const KeywordFilter& filter);

class Vocabulary {
public:
  Vocabulary() = default;
  /// Terms must be unique.
  explicit Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> doc_freq = {});

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const std::string& term(std::size_t id) const { return terms_.at(id); }
  const std::vector<std::string>& terms() const { return terms_; }
  std::optional<std::size_t> id(std::string_view term) const;
  std::size_t doc_freq(std::size_t id) const { return doc_freq_.at(id); }
  const std::vector<std::size_t>& doc_freqs() const { return doc_freq_; }

private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> doc_freq_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Sparse document-term counts. Each row is sorted by term id.
class DocTermMatrix {
public:
  struct Entry {
    std::uint32_t term;
    std::uint32_t count;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  DocTermMatrix() = default;
  DocTermMatrix(std::size_t n_terms, std::vector<std::vector<Entry>> rows);

  std::size_t n_docs() const { return rows_.size(); }
  std::size_t n_terms() const { return n_terms_; }
  bool empty() const { return rows_.empty() || n_terms_ == 0; }
  const std::vector<Entry>& row(std::size_t d) const { return rows_.at(d); }
  std::uint64_t row_sum(std::size_t d) const;
  std::uint64_t total() const;
  std::uint32_t count(std::size_t d, std::size_t term) const;

  /// Presence/absence copy (every non-zero count becomes 1).
  DocTermMatrix binarized() const;

  friend bool operator==(const DocTermMatrix&, const DocTermMatrix&) = default;

private:
  std::size_t n_terms_ = 0;
  std::vector<std::vector<Entry>> rows_;
};

/// Contiguous n-grams of orders 1..n_max, joined with "_".
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n_max);

/// Vocabulary sorted lexicographically; counts every n-gram of orders
/// 1..n_max per document. An empty corpus gives an empty vocabulary and a
/// 0x0 matrix.
std::pair<Vocabulary, DocTermMatrix> build_matrix(const Corpus& corpus, int n_max);

/// Counts the corpus against an existing vocabulary; unknown n-grams are
/// ignored.
DocTermMatrix count_matrix(const Corpus& corpus, const Vocabulary& vocab, int n_max);

struct SynthOptions {
  std::size_t n_docs = 200;
  std::size_t n_topics = 4;
  std::size_t vocab_per_topic = 12;
  std::size_t doc_len = 40;
  std::uint64_t seed = 7;
  int first_year = 2000;
  int last_year = 2023;
};

struct SynthCorpus {
  Corpus corpus;
  std::vector<std::size_t> labels;
  /// vocab_groups[k] holds the terms topic k draws from.
  std::vector<std::vector<std::string>> vocab_groups;
};

/// Each document draws all of its tokens uniformly from one topic's
/// vocabulary; topic vocabularies are disjoint. Timestamps are spread
/// uniformly over [first_year, last_year].
SynthCorpus synth_corpus(const SynthOptions& options);

/// The same corpus rendered as a Guardian-format JSON array, so it can be
/// pushed through ingest.
std::string synth_guardian_json(const SynthCorpus& synth);

/// {doc_id, source, timestamp, tokens} per line, keys sorted.
std::string corpus_to_ndjson(const Corpus& corpus);
Corpus corpus_from_ndjson(std::string_view text);

std::string records_to_ndjson(const std::vector<RawRecord>& records);
std::vector<RawRecord> records_from_ndjson(std::string_view text);

}  // namespace topicopt
