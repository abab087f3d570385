#include "topicopt/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <variant>

#include <json.hpp>

#include "topicopt/text_io.hpp"

namespace topicopt {

using nlohmann::json;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::guardian: return "guardian";
    case Source::reddit: return "reddit";
    case Source::twitter: return "twitter";
  }
  return "guardian";
}

Source source_from_string(std::string_view name) {
  if (name == "guardian") return Source::guardian;
  if (name == "reddit") return Source::reddit;
  if (name == "twitter") return Source::twitter;
  throw ConfigError("unknown source '" + std::string(name) + "' (expected guardian, reddit or twitter)");
}

// ---------------------------------------------------------------------------
// ingest

namespace {

const json* find_path(const json& obj, std::string_view dotted) {
  const json* cur = &obj;
  while (!dotted.empty()) {
    const auto dot = dotted.find('.');
    const std::string key(dotted.substr(0, dot));
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    dotted = dot == std::string_view::npos ? std::string_view{} : dotted.substr(dot + 1);
  }
  return cur;
}

std::optional<std::string> string_field(const json& obj, std::string_view path) {
  const json* v = find_path(obj, path);
  if (v == nullptr || v->is_null()) return std::nullopt;
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return std::to_string(v->get<std::int64_t>());
  if (v->is_number()) return format_double(v->get<double>());
  return std::nullopt;
}

std::string join_nonempty(const std::optional<std::string>& a, const std::optional<std::string>& b) {
  std::string out = a.value_or("");
  if (b && !b->empty()) {
    if (!out.empty()) out += ' ';
    out += *b;
  }
  return out;
}

struct FieldMap {
  std::string_view title;
  std::string_view body;
  std::string_view date;
  std::string_view url;
  std::vector<std::string_view> ids;
  bool title_mandatory;
};

FieldMap field_map(Source source) {
  switch (source) {
    case Source::guardian: return {"webTitle", "fields.bodyText", "webPublicationDate", "webUrl", {"id", "webUrl"}, false};
    case Source::reddit: return {"title", "selftext", "created_utc", "url", {"id"}, true};
    case Source::twitter: return {"", "text", "created_at", "", {"id_str", "id"}, false};
  }
  return {};
}

std::variant<RawRecord, std::string> convert(const json& obj, Source source, std::size_t index) {
  if (!obj.is_object()) return std::string("record is not a JSON object");
  const FieldMap fm = field_map(source);

  std::optional<std::string> title;
  if (!fm.title.empty()) {
    title = string_field(obj, fm.title);
    if (fm.title_mandatory && !title) return "missing mandatory field '" + std::string(fm.title) + "'";
  }
  auto body = string_field(obj, fm.body);
  // A Reddit link post legitimately has no selftext.
  if (!body && source != Source::reddit) return "missing mandatory field '" + std::string(fm.body) + "'";

  const auto date_text = string_field(obj, fm.date);
  if (!date_text) return "missing mandatory field '" + std::string(fm.date) + "'";
  const auto ts = parse_timestamp(*date_text);
  if (!ts) return "unparseable timestamp in '" + std::string(fm.date) + "': " + *date_text;

  RawRecord rec;
  rec.source = source;
  rec.title = title;
  rec.body = join_nonempty(title, body);
  rec.timestamp = *ts;
  if (!fm.url.empty()) rec.url = string_field(obj, fm.url);
  for (auto key : fm.ids) {
    if (auto id = string_field(obj, key)) {
      rec.id = *id;
      break;
    }
  }
  if (rec.id.empty()) rec.id = std::string(to_string(source)) + "-" + std::to_string(index);
  return rec;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

IngestResult ingest_text(std::string_view text, Source source) {
  std::vector<json> objects;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '[') {
    try {
      json doc = json::parse(text.begin(), text.end());
      for (auto& el : doc) objects.push_back(std::move(el));
    } catch (const json::parse_error& e) {
      // nlohmann reports the 1-based offset of the offending byte.
      const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
      throw ParseError("malformed JSON: " + std::string(e.what()), line, col);
    }
  } else {
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
      ++line_no;
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      const std::string_view line = text.substr(start, end - start);
      if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
        try {
          objects.push_back(json::parse(line.begin(), line.end()));
        } catch (const json::parse_error& e) {
          throw ParseError("malformed NDJSON record: " + std::string(e.what()), line_no, e.byte);
        }
      }
      start = end + 1;
    }
  }

  IngestResult result;
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    auto converted = convert(objects[i], source, i);
    if (auto* err = std::get_if<std::string>(&converted)) {
      result.errors.push_back({i, *err});
      continue;
    }
    auto& rec = std::get<RawRecord>(converted);
    if (!seen_ids.insert(rec.id).second) {
      result.errors.push_back({i, "duplicate id '" + rec.id + "'"});
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

IngestResult ingest(const std::filesystem::path& path, Source source) { return ingest_text(read_file(path), source); }

// ---------------------------------------------------------------------------
// preprocessing

const std::unordered_set<std::string>& default_stopwords() {
  // English list, fixed snapshot.
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "ain", "all", "am", "an", "and", "any", "are", "aren",
      "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
      "couldn", "d", "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during", "each", "few", "for",
      "from", "further", "had", "hadn", "has", "hasn", "have", "haven", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "isn", "it", "its", "itself",
      "just", "ll", "m", "ma", "me", "mightn", "more", "most", "mustn", "my", "myself", "needn", "no", "nor",
      "not", "now", "o", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
      "over", "own", "re", "s", "same", "shan", "she", "should", "shouldn", "so", "some", "such", "t", "than",
      "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
      "through", "to", "too", "under", "until", "up", "ve", "very", "was", "wasn", "we", "were", "weren", "what",
      "when", "where", "which", "while", "who", "whom", "why", "will", "with", "won", "wouldn", "y", "you",
      "your", "yours", "yourself", "yourselves", "dont", "doesnt", "didnt", "isnt", "wasnt", "arent", "cant", "wont", "im", "ive", "youre", "thats", "theyre",
  };
  return words;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::unordered_set<std::string> out;
  for (auto& w : parse_list_file(read_file(path))) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.insert(std::move(w));
  }
  return out;
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

std::string normalize_once(std::string_view w) {
  std::string s(w);
  if (ends_with(s, "sses")) return s.substr(0, s.size() - 2);
  if (ends_with(s, "ies") && s.size() > 4) return s.substr(0, s.size() - 3) + "y";
  if (ends_with(s, "xes") || ends_with(s, "ches") || ends_with(s, "shes") || ends_with(s, "zzes"))
    return s.substr(0, s.size() - 2);
  if (ends_with(s, "s") && s.size() > 3) {
    const char before = s[s.size() - 2];
    if (before != 's' && before != 'u' && before != 'i') return s.substr(0, s.size() - 1);
    return s;
  }
  for (std::string_view suffix : {std::string_view("ing"), std::string_view("ed")}) {
    if (!ends_with(s, suffix)) continue;
    const std::string stem = s.substr(0, s.size() - suffix.size());
    if (stem.size() < 4) return s;
    const char last = stem.back();
    const char prev = stem[stem.size() - 2];
    if (last == prev && !is_vowel(last) && std::isalpha(static_cast<unsigned char>(last)) && last != 'l' &&
        last != 's' && last != 'z')
      return stem.substr(0, stem.size() - 1);
    return s;
  }
  return s;
}

}  // namespace

std::string normalize_token(std::string_view token) {
  std::string cur(token);
  // Every rule shortens the word, so this terminates.
  for (;;) {
    std::string next = normalize_once(cur);
    if (next == cur) return cur;
    cur = std::move(next);
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  static const std::regex url_re(R"((?:[a-z][a-z0-9+.\-]*://|www\.)\S*)");
  static const std::regex email_re(R"([a-z0-9._%+\-]+@[a-z0-9\-]+(?:\.[a-z0-9\-]+)*\.[a-z]+)");

  std::string s(text);
  s = std::regex_replace(s, url_re, " ");
  s = std::regex_replace(s, email_re, " ");

  std::vector<std::string> tokens;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == '\'') continue;
    // U+2019 right single quotation mark
    if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        static_cast<unsigned char>(s[i + 2]) == 0x99) {
      i += 2;
      continue;
    }
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur += static_cast<char>(c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

std::string lowercase(std::string_view text) {
  std::string s(text);
  for (auto& ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80) ch = static_cast<char>(std::tolower(c));
  }
  return s;
}

}  // namespace

Corpus preprocess(const std::vector<RawRecord>& records, const std::unordered_set<std::string>& stopwords,
                  const PreprocessOptions& options) {
  Corpus corpus;
  for (const auto& rec : records) {
    Document doc;
    for (auto& raw : tokenize(lowercase(rec.body))) {
      if (stopwords.contains(raw)) continue;
      std::string tok = normalize_token(raw);
      if (tok.size() < 2 || stopwords.contains(tok)) continue;
      doc.tokens.push_back(std::move(tok));
      if (doc.tokens.size() >= options.max_tokens) break;
    }
    if (doc.tokens.size() < options.min_tokens || doc.tokens.empty()) continue;
    doc.timestamp = rec.timestamp;
    doc.source = rec.source;
    doc.doc_id = corpus.docs.size();
    doc.raw_text = rec.body;
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// keyword filter

namespace {

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : lowercase(text)) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == '\'') continue;
    if (std::isalnum(c) && c < 0x80) {
      cur += static_cast<char>(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

KeywordFilter::KeywordFilter(std::vector<std::string> phrases) : phrases_(std::move(phrases)) {
  for (const auto& p : phrases_) {
    auto words = words_of(p);
    if (!words.empty()) phrase_words_.push_back(std::move(words));
  }
  if (phrase_words_.empty()) throw ConfigError("keyword filter is empty");
}

KeywordFilter KeywordFilter::circular_economy() {
  return KeywordFilter({
      "sustainable development", "energy saving and environmental protection", "energy saving",
      "green economy", "eco-design", "energy conservation",
      "clean manufacturing", "reuse", "zero waste",
      "renewable energy", "reducing carbon footprint", "renewable resources",
      "waste reduction", "low carbon", "closed-loop system",
      "energy efficiency", "green manufacturing", "environment friendly",
      "green procurement", "recycling", "environmentally friendly",
      "green", "natural capital", "biomimicry",
      "social responsibility", "environmental economics", "efficient use",
      "regeneration cycle", "sustainable supply chain", "industrial ecology",
      "durability", "environmental impact assessment", "resource efficiency",
      "sharing economy", "eco-friendly products", "save resources",
      "green low carbon", "clean production", "sustainable consumption",
      "eco-efficiency", "resource saving", "clean",
      "environmental protection", "clean energy", "biodegradable material",
      "extended producer responsibility", "ecological civilization", "environmental governance",
      "zero emission", "resource recovery", "remanufacturing",
      "waste management", "green ecology",
  });
}

bool KeywordFilter::matches(std::string_view text) const {
  const auto words = words_of(text);
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (const auto& phrase : phrase_words_) {
      if (i + phrase.size() > words.size()) continue;
      if (std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
  }
  return false;
}

Corpus filter_by_keywords(const Corpus& corpus, const KeywordFilter& filter) {
  Corpus out;
  for (const auto& doc : corpus.docs) {
    bool keep;
    if (!doc.raw_text.empty()) {
      keep = filter.matches(doc.raw_text);
    } else {
      std::string joined;
      for (const auto& t : doc.tokens) joined += t + ' ';
      keep = filter.matches(joined);
    }
    if (!keep) continue;
    Document d = doc;
    d.doc_id = out.docs.size();
    out.docs.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// vocabulary and counts

Vocabulary::Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> doc_freq)
    : terms_(std::move(terms)), doc_freq_(std::move(doc_freq)) {
  if (doc_freq_.empty()) doc_freq_.assign(terms_.size(), 0);
  if (doc_freq_.size() != terms_.size()) throw DataError("vocabulary document-frequency size mismatch");
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i], i).second) throw DataError("duplicate vocabulary term '" + terms_[i] + "'");
  }
}

std::optional<std::size_t> Vocabulary::id(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DocTermMatrix::DocTermMatrix(std::size_t n_terms, std::vector<std::vector<Entry>> rows)
    : n_terms_(n_terms), rows_(std::move(rows)) {
  for (const auto& r : rows_)
    for (const auto& e : r)
      if (e.term >= n_terms_) throw DataError("document-term entry outside vocabulary");
}

std::uint64_t DocTermMatrix::row_sum(std::size_t d) const {
  std::uint64_t s = 0;
  for (const auto& e : rows_.at(d)) s += e.count;
  return s;
}

std::uint64_t DocTermMatrix::total() const {
  std::uint64_t s = 0;
  for (std::size_t d = 0; d < rows_.size(); ++d) s += row_sum(d);
  return s;
}

std::uint32_t DocTermMatrix::count(std::size_t d, std::size_t term) const {
  const auto& r = rows_.at(d);
  auto it = std::lower_bound(r.begin(), r.end(), term, [](const Entry& e, std::size_t t) { return e.term < t; });
  return it != r.end() && it->term == term ? it->count : 0;
}

DocTermMatrix DocTermMatrix::binarized() const {
  auto rows = rows_;
  for (auto& r : rows)
    for (auto& e : r) e.count = 1;
  return DocTermMatrix(n_terms_, std::move(rows));
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n_max) {
  std::vector<std::string> out;
  for (int n = 1; n <= n_max; ++n) {
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (std::size_t j = 1; j < un; ++j) g += "_" + tokens[i + j];
      out.push_back(std::move(g));
    }
  }
  return out;
}

namespace {

void check_ngram_order(int n_max) {
  if (n_max < 1 || n_max > 3) throw ConfigError("n-gram order must be 1, 2 or 3 (got " + std::to_string(n_max) + ")");
}

}  // namespace

std::pair<Vocabulary, DocTermMatrix> build_matrix(const Corpus& corpus, int n_max) {
  check_ngram_order(n_max);
  if (corpus.empty()) return {Vocabulary{}, DocTermMatrix{}};

  std::vector<std::map<std::string, std::uint32_t>> per_doc(corpus.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (auto& g : ngrams(corpus.docs[d].tokens, n_max)) ++per_doc[d][std::move(g)];
    for (const auto& [term, _] : per_doc[d]) ++df[term];
  }
  std::vector<std::string> terms;
  std::vector<std::size_t> freqs;
  terms.reserve(df.size());
  for (const auto& [term, f] : df) {
    terms.push_back(term);
    freqs.push_back(f);
  }
  Vocabulary vocab(std::move(terms), std::move(freqs));

  std::vector<std::vector<DocTermMatrix::Entry>> rows(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    rows[d].reserve(per_doc[d].size());
    // std::map iteration is sorted, and vocabulary ids follow the same order.
    for (const auto& [term, c] : per_doc[d])
      rows[d].push_back({static_cast<std::uint32_t>(*vocab.id(term)), c});
  }
  return {std::move(vocab), DocTermMatrix(vocab.size(), std::move(rows))};
}

DocTermMatrix count_matrix(const Corpus& corpus, const Vocabulary& vocab, int n_max) {
  check_ngram_order(n_max);
  std::vector<std::vector<DocTermMatrix::Entry>> rows(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& g : ngrams(corpus.docs[d].tokens, n_max))
      if (auto id = vocab.id(g)) ++counts[static_cast<std::uint32_t>(*id)];
    for (const auto& [t, c] : counts) rows[d].push_back({t, c});
  }
  return DocTermMatrix(vocab.size(), std::move(rows));
}

// ---------------------------------------------------------------------------
// synthetic corpora

namespace {

const std::array<std::array<std::string_view, 12>, 8> kThemedVocab = {{
    {"plastic", "bottle", "packaging", "recycle", "waste", "landfill", "polymer", "container", "wrapper", "litter",
     "ocean", "straw"},
    {"solar", "wind", "turbine", "renewable", "grid", "battery", "power", "electricity", "panel", "carbon",
     "emission", "fossil"},
    {"fashion", "textile", "clothing", "garment", "cotton", "fabric", "repair", "secondhand", "wardrobe", "denim",
     "thrift", "apparel"},
    {"food", "compost", "organic", "farm", "harvest", "soil", "crop", "kitchen", "leftover", "meal", "agriculture",
     "fertiliser"},
    {"phone", "laptop", "device", "electronic", "circuit", "chip", "gadget", "refurbish", "component", "lithium",
     "smartphone", "ewaste"},
    {"building", "concrete", "steel", "timber", "cement", "brick", "demolition", "architecture", "housing",
     "insulation", "material", "infrastructure"},
    {"policy", "government", "regulation", "tax", "legislation", "council", "minister", "directive", "tariff",
     "subsidy", "target", "strategy"},
    {"water", "river", "rain", "drought", "irrigation", "pipe", "wastewater", "reservoir", "flood", "aquifer",
     "sewage", "desalination"},
}};

}  // namespace

SynthCorpus synth_corpus(const SynthOptions& o) {
  if (o.n_docs < 1 || o.n_topics < 1 || o.vocab_per_topic < 1 || o.doc_len < 1)
    throw ConfigError("synthetic corpus sizes must all be >= 1");
  if (o.last_year < o.first_year) throw ConfigError("synthetic corpus year range is empty");

  SynthCorpus out;
  const bool themed = o.n_topics <= kThemedVocab.size() && o.vocab_per_topic <= kThemedVocab[0].size();
  out.vocab_groups.resize(o.n_topics);
  for (std::size_t k = 0; k < o.n_topics; ++k) {
    for (std::size_t j = 0; j < o.vocab_per_topic; ++j) {
      out.vocab_groups[k].push_back(themed ? std::string(kThemedVocab[k][j])
                                           : "topic" + std::to_string(k) + "term" + std::to_string(j));
    }
  }

  Rng rng(o.seed);
  out.labels.resize(o.n_docs);
  for (std::size_t d = 0; d < o.n_docs; ++d) out.labels[d] = d % o.n_topics;
  for (std::size_t d = o.n_docs; d > 1; --d) std::swap(out.labels[d - 1], out.labels[rng.below(d)]);

  const std::int64_t t0 = epoch_from_civil(o.first_year, 1, 1);
  const std::int64_t t1 = epoch_from_civil(o.last_year + 1, 1, 1);
  for (std::size_t d = 0; d < o.n_docs; ++d) {
    Document doc;
    const auto& group = out.vocab_groups[out.labels[d]];
    for (std::size_t i = 0; i < o.doc_len; ++i) doc.tokens.push_back(group[rng.below(group.size())]);
    doc.timestamp = t0 + static_cast<std::int64_t>(rng.below(static_cast<std::size_t>(t1 - t0)));
    doc.source = Source::guardian;
    doc.doc_id = d;
    out.corpus.docs.push_back(std::move(doc));
  }
  return out;
}

std::string synth_guardian_json(const SynthCorpus& synth) {
  json arr = json::array();
  for (const auto& doc : synth.corpus.docs) {
    std::string body;
    for (const auto& t : doc.tokens) {
      if (!body.empty()) body += ' ';
      body += t;
    }
    json obj;
    obj["id"] = "synthetic/" + std::to_string(doc.doc_id);
    obj["webPublicationDate"] = format_timestamp(*doc.timestamp);
    obj["webUrl"] = "https://example.org/synthetic/" + std::to_string(doc.doc_id);
    obj["fields"]["bodyText"] = body;
    arr.push_back(std::move(obj));
  }
  return arr.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// serialisation

std::string corpus_to_ndjson(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.docs) {
    json j;
    j["doc_id"] = doc.doc_id;
    j["source"] = to_string(doc.source);
    j["timestamp"] = doc.timestamp ? json(format_timestamp(*doc.timestamp)) : json(nullptr);
    j["tokens"] = doc.tokens;
    out += j.dump() + "\n";
  }
  return out;
}

Corpus corpus_from_ndjson(std::string_view text) {
  Corpus corpus;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw ParseError("malformed corpus line: " + std::string(e.what()), line_no, e.byte);
    }
    Document doc;
    try {
      doc.tokens = j.at("tokens").get<std::vector<std::string>>();
      doc.source = source_from_string(j.at("source").get<std::string>());
      const auto& ts = j.at("timestamp");
      if (!ts.is_null()) {
        doc.timestamp = parse_timestamp(ts.get<std::string>());
        if (!doc.timestamp) throw DataError("bad timestamp");
      }
    } catch (const json::exception& e) {
      throw ParseError("invalid corpus record: " + std::string(e.what()), line_no, 1);
    } catch (const ConfigError& e) {
      throw ParseError(std::string("invalid corpus record: ") + e.what(), line_no, 1);
    }
    doc.doc_id = corpus.docs.size();
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

std::string records_to_ndjson(const std::vector<RawRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["body"] = r.body;
    j["id"] = r.id;
    j["source"] = to_string(r.source);
    j["timestamp"] = format_timestamp(r.timestamp);
    j["title"] = r.title ? json(*r.title) : json(nullptr);
    j["url"] = r.url ? json(*r.url) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<RawRecord> records_from_ndjson(std::string_view text) {
  std::vector<RawRecord> out;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line.begin(), line.end());
      RawRecord r;
      r.body = j.at("body").get<std::string>();
      r.id = j.at("id").get<std::string>();
      r.source = source_from_string(j.at("source").get<std::string>());
      const auto ts = parse_timestamp(j.at("timestamp").get<std::string>());
      if (!ts) throw ParseError("bad timestamp", line_no, 1);
      r.timestamp = *ts;
      if (!j.at("title").is_null()) r.title = j.at("title").get<std::string>();
      if (!j.at("url").is_null()) r.url = j.at("url").get<std::string>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError("invalid record line: " + std::string(e.what()), line_no, 1);
    }
  }
  return out;
}

}  // namespace topicopt
