#include "topicopt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "topicopt/text_io.hpp"

namespace topicopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// typed field access

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& field(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) bad_field(path + "." + key, "missing");
  return *it;
}

double number(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_number()) bad_field(path + "." + key, "expected a number");
  return v.get<double>();
}

double positive(const json& obj, const std::string& path, const char* key) {
  const double v = number(obj, path, key);
  if (!(v > 0.0) || !std::isfinite(v)) bad_field(path + "." + key, "must be positive");
  return v;
}

std::size_t count(const json& obj, const std::string& path, const char* key, std::size_t min) {
  const json& v = field(obj, path, key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    bad_field(path + "." + key, "expected a non-negative integer");
  const auto n = v.get<std::uint64_t>();
  if (n < min) bad_field(path + "." + key, "must be at least " + std::to_string(min));
  return static_cast<std::size_t>(n);
}

std::string text(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_string()) bad_field(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_text(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) bad_field(path + "." + key, "expected a string or null");
  if (v.get<std::string>().empty()) return std::nullopt;
  return v.get<std::string>();
}

int ngram_order(const json& obj, const std::string& path) {
  const std::size_t n = count(obj, path, "n_gram", 1);
  if (n > 3) bad_field(path + ".n_gram", "must be 1, 2 or 3");
  return static_cast<int>(n);
}

void merge_into(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) bad_field(path.empty() ? "config" : path, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string sub = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) bad_field(sub, "unknown field");
    json& slot = base[it.key()];
    if (slot.is_object())
      merge_into(slot, it.value(), sub);
    else
      slot = it.value();
  }
}

std::vector<std::string> split_dotted(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    parts.emplace_back(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

SearchSpace parse_space(const json& j) {
  const std::string path = "hpo.space";
  if (!j.is_array()) bad_field(path, "expected an array of domains");
  SearchSpace space;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const json& d = j[i];
    if (!d.is_object()) bad_field(p, "expected an object");
    for (auto it = d.begin(); it != d.end(); ++it)
      if (it.key() != "name" && it.key() != "values" && it.key() != "lo" && it.key() != "hi")
        bad_field(p + "." + it.key(), "unknown field");
    const std::string name = text(d, p, "name");
    if (d.contains("values")) {
      if (d.contains("lo") || d.contains("hi")) bad_field(p, "give either values or lo/hi");
      const json& vals = d["values"];
      if (!vals.is_array()) bad_field(p + ".values", "expected an array of numbers");
      std::vector<double> v;
      for (const auto& x : vals) {
        if (!x.is_number()) bad_field(p + ".values", "expected an array of numbers");
        v.push_back(x.get<double>());
      }
      space.domains.push_back(ParamDomain::categorical(name, v));
    } else {
      const json& lo = field(d, p, "lo");
      const json& hi = field(d, p, "hi");
      if (!lo.is_number_integer() || !hi.is_number_integer()) bad_field(p, "lo and hi must be integers");
      space.domains.push_back(ParamDomain::integer(name, lo.get<std::int64_t>(), hi.get<std::int64_t>()));
    }
  }
  try {
    space.validate();
  } catch (const ConfigError& e) {
    bad_field(path, e.what());
  }
  return space;
}

json space_json(const SearchSpace& space) {
  json out = json::array();
  for (const auto& d : space.domains) {
    json j{{"name", d.name}};
    if (d.kind == DomainKind::categorical_numeric) {
      j["values"] = json::array();
      for (double v : d.values) {
        if (v == std::floor(v) && std::abs(v) < 9e15)
          j["values"].push_back(static_cast<std::int64_t>(v));
        else
          j["values"].push_back(v);
      }
    } else {
      j["lo"] = d.lo;
      j["hi"] = d.hi;
    }
    out.push_back(j);
  }
  return out;
}

std::vector<std::string> allowed_params(ModelKind kind) {
  switch (kind) {
    case ModelKind::lda: return {"alpha", "eta", "n_gram", "n_topics"};
    case ModelKind::corex: return {"anchor_strength", "n_gram", "n_hidden"};
    case ModelKind::cluster: return {"min_dist", "n_clusters", "n_components", "n_gram", "n_neighbors", "temperature"};
  }
  return {};
}

SearchSpace default_space(ModelKind kind, const std::string& mode) {
  switch (kind) {
    case ModelKind::lda: return lda_space();
    case ModelKind::corex: return corex_space();
    case ModelKind::cluster: return mode == "moo" ? cluster_model_moo_space() : cluster_model_space();
  }
  return {};
}

// ---------------------------------------------------------------------------
// artifacts and manifest

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return out;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + " is not a matrix");
  std::vector<std::vector<double>> rows;
  for (const auto& r : j) {
    if (!r.is_array()) throw DataError(what + " is not a matrix");
    rows.push_back(r.get<std::vector<double>>());
  }
  return matrix_from_rows(rows);
}

json versions_json() {
  return {{"topicopt", kVersion},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

/// The experiment's identity: the resolved config without the output
/// directory, so the same experiment hashes the same wherever it is written.
json identity_config(const ExperimentConfig& config) {
  json j = config.resolved;
  j.erase("output");
  return j;
}

std::string without_wall_times(std::string_view text) {
  constexpr std::string_view key = "\"wall_time_ms\":";
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = text.find(key, pos);
    if (hit == std::string_view::npos) break;
    std::size_t end = hit + key.size();
    while (end < text.size() && text[end] == ' ') ++end;
    while (end < text.size() && std::string_view("0123456789.eE+-").find(text[end]) != std::string_view::npos) ++end;
    out.append(text.substr(pos, hit - pos)).append(key);
    pos = end;
  }
  out.append(text.substr(pos));
  return out;
}

/// One command's bookkeeping. The manifest entry is written before any
/// artifact (status "running") and rewritten at the end.
class Stage {
public:
  Stage(const ExperimentConfig& config, std::string name) : config_(config), name_(std::move(name)) {
    start_ = std::chrono::steady_clock::now();
    fs::create_directories(config.output);
    const fs::path m = config.output / "manifest.json";
    if (fs::exists(m)) {
      try {
        manifest_ = json::parse(read_file(m));
      } catch (const json::exception& e) {
        throw DataError("unreadable manifest " + m.string() + ": " + e.what());
      }
    }
    if (!manifest_.is_object()) manifest_ = json::object();
    entry_ = {{"command", name_},
              {"config", identity_config(config)},
              {"config_hash", hex64(fnv1a64(identity_config(config).dump()))},
              {"inputs", json::object()},
              {"outputs", json::object()},
              {"seed", config.seed},
              {"status", "running"},
              {"versions", versions_json()},
              {"warnings", json::array()}};
  }

  /// An artifact of an earlier command; its absence names that command.
  std::string artifact(const std::string& rel, const std::string& producer) {
    const fs::path p = config_.output / rel;
    if (!fs::exists(p))
      throw DataError("missing " + p.string() + "; run 'topicopt " + producer + "' first");
    std::string data = read_file(p);
    entry_["inputs"][rel] = hex64(fnv1a64(data));
    return data;
  }

  bool has_artifact(const std::string& rel) const { return fs::exists(config_.output / rel); }

  std::string external(const fs::path& p, const std::string& field_name) {
    if (!fs::exists(p)) throw ConfigError(field_name + ": file not found: " + p.string());
    std::string data = read_file(p);
    entry_["inputs"][p.string()] = hex64(fnv1a64(data));
    return data;
  }

  void begin() { save(); }

  /// Files carrying timings are hashed with those values blanked, so equal
  /// runs have equal manifests.
  void write(const std::string& rel, const std::string& contents, bool timed = false) {
    const fs::path p = config_.output / rel;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_file(p, contents);
    entry_["outputs"][rel] = hex64(fnv1a64(timed ? without_wall_times(contents) : contents));
    if (timed) entry_["hash_excludes"] = "wall_time_ms";
  }

  void warn_all(const Warnings& w) {
    for (const auto& s : w) entry_["warnings"].push_back(s);
  }

  void finish(const std::string& status, const std::string& error = {}) {
    entry_["status"] = status;
    if (!error.empty()) entry_["error"] = error;
    entry_["wall_time_ms"] =
        std::round(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count() * 1e3) /
        1e3;
    save();
  }

private:
  void save() {
    manifest_["stages"][name_] = entry_;
    write_file(config_.output / "manifest.json", dump(manifest_));
  }

  const ExperimentConfig& config_;
  std::string name_;
  json manifest_;
  json entry_;
  std::chrono::steady_clock::time_point start_;
};

void run_stage(const ExperimentConfig& config, const std::string& name, const std::function<void(Stage&)>& body) {
  Stage stage(config, name);
  try {
    body(stage);
  } catch (const std::exception& e) {
    try {
      stage.finish("failed", e.what());
    } catch (...) {
    }
    throw;
  }
  stage.finish("complete");
}

Corpus load_corpus(Stage& stage) { return corpus_from_ndjson(stage.artifact("corpus.ndjson", "preprocess")); }

// ---------------------------------------------------------------------------
// model fitting shared by train and hpo

struct Fitted {
  ModelKind kind = ModelKind::cluster;
  TopicSet topics;
  Matrix doc_topic;
  std::optional<Matrix> topic_word;  // absent for CorEx
  Matrix weights;                    // topics x V, for similarity
  Vocabulary vocab;
  DocTermMatrix counts;
  int n_gram = 1;
  json model;
  std::optional<Matrix> reduced;
  Warnings warnings;
};

EmbeddingMatrix embeddings_for(const ExperimentConfig& config, const Corpus& corpus, Warnings* warnings) {
  if (config.cluster.embeddings) {
    if (!fs::exists(*config.cluster.embeddings))
      throw ConfigError("cluster.embeddings: file not found: " + config.cluster.embeddings->string());
    return load_embeddings(*config.cluster.embeddings, corpus.size());
  }
  const auto [vocab, counts] = build_matrix(corpus, 1);
  if (config.cluster.embedding_dim > vocab.size())
    throw ConfigError("cluster.embedding_dim: " + std::to_string(config.cluster.embedding_dim) +
                      " exceeds the vocabulary size " + std::to_string(vocab.size()));
  return fallback_embed(counts, config.cluster.embedding_dim, mix_seed(config.seed, 0xE3BED), warnings);
}

json lda_config_json(const LDAConfig& c, int n_gram) {
  return {{"n_topics", c.n_topics}, {"alpha", c.alpha},       {"eta", c.eta},   {"n_iterations", c.n_iterations},
          {"burn_in", c.burn_in},   {"sample_lag", c.sample_lag}, {"seed", c.seed}, {"n_gram", n_gram}};
}

json corex_config_json(const CorExConfig& c, int n_gram) {
  json anchors = json::array();
  for (const auto& a : c.anchors) anchors.push_back({{"terms", a.terms}, {"factor", a.factor}});
  return {{"n_hidden", c.n_hidden}, {"anchors", anchors}, {"anchor_strength", c.anchor_strength},
          {"max_iter", c.max_iter}, {"tol", c.tol},       {"seed", c.seed},
          {"n_gram", n_gram}};
}

json cluster_config_json(const ClusterConfig& c) {
  return {{"n_gram", c.n_gram},
          {"n_clusters", c.kmeans.n_clusters},
          {"n_init", c.kmeans.n_init},
          {"max_iter", c.kmeans.max_iter},
          {"n_components", c.umap.n_components},
          {"n_neighbors", c.umap.n_neighbors},
          {"min_dist", c.umap.min_dist},
          {"spread", c.umap.spread},
          {"n_epochs", c.umap.n_epochs},
          {"negative_sample_rate", c.umap.negative_sample_rate},
          {"learning_rate", c.umap.learning_rate},
          {"temperature", c.temperature},
          {"seed", c.umap.seed}};
}

Fitted fit_lda(const Corpus& corpus, const LDAConfig& cfg, int n_gram, std::size_t top_n) {
  Fitted f;
  f.kind = ModelKind::lda;
  f.n_gram = n_gram;
  std::tie(f.vocab, f.counts) = build_matrix(corpus, n_gram);
  const LDAModel m = train_lda(f.counts, cfg);
  f.topics = top_words(m, f.vocab, top_n);
  f.doc_topic = m.theta;
  f.topic_word = m.phi;
  f.weights = m.phi;
  f.model = {{"model", "lda"},      {"vocab", f.vocab.terms()}, {"phi", matrix_json(m.phi)},
             {"theta", matrix_json(m.theta)}, {"config", lda_config_json(cfg, n_gram)}};
  return f;
}

Fitted fit_corex(const Corpus& corpus, const CorExConfig& cfg, int n_gram, std::size_t top_n) {
  Fitted f;
  f.kind = ModelKind::corex;
  f.n_gram = n_gram;
  std::tie(f.vocab, f.counts) = build_matrix(corpus, n_gram);
  const CorExModel m = train_corex(f.counts, cfg, &f.vocab, &f.warnings);
  f.topics = corex_top_words(m, f.vocab, top_n);
  f.doc_topic = m.p_y_given_doc;
  f.weights = m.word_factor_mi;
  f.model = {{"model", "corex"},
             {"vocab", f.vocab.terms()},
             {"word_factor_mi", matrix_json(m.word_factor_mi)},
             {"word_assignment", m.word_assignment},
             {"tc_per_factor", m.tc_per_factor},
             {"tc_trace", m.tc_trace},
             {"iterations", m.iterations},
             {"converged", m.converged},
             {"config", corex_config_json(cfg, n_gram)}};
  return f;
}

Fitted fit_cluster(const Corpus& corpus, const EmbeddingMatrix& emb, const ClusterConfig& cfg, std::size_t top_n) {
  Fitted f;
  f.kind = ModelKind::cluster;
  f.n_gram = cfg.n_gram;
  ClusterTopicModel m = fit_cluster_model(corpus, emb.values, cfg, &f.warnings);
  f.topics = extract_cluster_topics(m.ctfidf, m.vocab, top_n);
  f.doc_topic = m.doc_topic;
  f.topic_word = cluster_topic_word(m.ctfidf);
  f.weights = m.ctfidf.weights;
  f.vocab = m.vocab;
  f.counts = m.counts;
  f.reduced = m.reduced;
  f.model = {{"model", "cluster"},
             {"vocab", m.vocab.terms()},
             {"ctfidf", matrix_json(m.ctfidf.weights)},
             {"assignments", m.clusters.assignments},
             {"centroids", matrix_json(m.clusters.centroids)},
             {"inertia", m.clusters.inertia},
             {"embedding_provenance", emb.provenance == EmbeddingProvenance::fallback ? "fallback" : "external_file"},
             {"config", cluster_config_json(cfg)}};
  return f;
}

LDAConfig lda_with(const ExperimentConfig& c, const ParamMap& p, std::uint64_t seed, int& n_gram) {
  LDAConfig cfg = c.lda;
  cfg.seed = seed;
  n_gram = c.lda_n_gram;
  for (const auto& [k, v] : p) {
    if (k == "n_topics") cfg.n_topics = static_cast<std::size_t>(v);
    else if (k == "alpha") cfg.alpha = v;
    else if (k == "eta") cfg.eta = v;
    else if (k == "n_gram") n_gram = static_cast<int>(v);
  }
  return cfg;
}

CorExConfig corex_with(const ExperimentConfig& c, const ParamMap& p, std::uint64_t seed, int& n_gram) {
  CorExConfig cfg = c.corex;
  cfg.seed = seed;
  n_gram = c.corex_n_gram;
  for (const auto& [k, v] : p) {
    if (k == "anchor_strength") cfg.anchor_strength = v;
    else if (k == "n_hidden") cfg.n_hidden = static_cast<std::size_t>(v);
    else if (k == "n_gram") n_gram = static_cast<int>(v);
  }
  return cfg;
}

ClusterConfig cluster_with(const ExperimentConfig& c, const ParamMap& p, std::uint64_t seed) {
  ClusterConfig cfg = c.cluster.cluster;
  cfg.umap.seed = seed;
  cfg.kmeans.seed = seed;
  for (const auto& [k, v] : p) {
    if (k == "n_gram") cfg.n_gram = static_cast<int>(v);
    else if (k == "n_clusters") cfg.kmeans.n_clusters = static_cast<std::size_t>(v);
    else if (k == "n_components") cfg.umap.n_components = static_cast<std::size_t>(v);
    else if (k == "n_neighbors") cfg.umap.n_neighbors = static_cast<std::size_t>(v);
    else if (k == "min_dist") cfg.umap.min_dist = v;
    else if (k == "temperature") cfg.temperature = v;
  }
  return cfg;
}

void check_ngram(double v) {
  if (v != 1 && v != 2 && v != 3) throw ConfigError("n_gram must be 1, 2 or 3");
}

MetricReport score(const Fitted& f, const Corpus& corpus, const MetricConfig& metrics) {
  if (f.topic_word) return evaluate_topics(f.topics, corpus, metrics, &f.doc_topic, &*f.topic_word, &f.counts);
  return evaluate_topics(f.topics, corpus, metrics);
}

std::vector<double> objective_values(const MetricReport& r, const std::vector<Objective>& objectives) {
  std::vector<double> out;
  for (const auto& o : objectives) {
    if (o.name == "coherence") out.push_back(r.coherence);
    else if (o.name == "diversity") out.push_back(r.diversity);
    else if (o.name == "perplexity") {
      if (!r.perplexity) throw ConfigError("perplexity is not available for this model");
      out.push_back(*r.perplexity);
    }
  }
  return out;
}

std::string doc_topic_csv(const Matrix& m) { return embeddings_to_csv(m); }

}  // namespace

// ---------------------------------------------------------------------------
// configuration

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "lda") return ModelKind::lda;
  if (name == "corex") return ModelKind::corex;
  if (name == "cluster") return ModelKind::cluster;
  throw ConfigError("model: unknown model '" + std::string(name) + "' (expected lda, corex or cluster)");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::lda: return "lda";
    case ModelKind::corex: return "corex";
    case ModelKind::cluster: return "cluster";
  }
  return "";
}

json default_config_json() {
  return {
      {"seed", 1},
      {"output", "out"},
      {"model", "cluster"},
      {"data",
       {{"path", "data/synthetic_200.json"},
        {"source", "guardian"},
        {"stopwords", nullptr},
        {"keywords", nullptr},
        {"min_tokens", 3},
        {"max_tokens", 5000}}},
      {"lda",
       {{"n_topics", 5}, {"alpha", 0.1}, {"eta", 0.1}, {"n_iterations", 500}, {"burn_in", 250}, {"sample_lag", 10},
        {"n_gram", 1}}},
      {"corex",
       {{"n_hidden", 5}, {"anchors", json::array()}, {"anchor_strength", 1.0}, {"max_iter", 200}, {"tol", 1e-6},
        {"n_gram", 1}}},
      {"cluster",
       {{"embeddings", nullptr},
        {"embedding_dim", 32},
        {"n_gram", 1},
        {"n_clusters", 8},
        {"n_components", 5},
        {"n_neighbors", 15},
        {"min_dist", 0.1},
        {"spread", 1.0},
        {"n_epochs", 200},
        {"negative_sample_rate", 5},
        {"learning_rate", 1.0},
        {"n_init", 3},
        {"max_iter", 300},
        {"temperature", 1.0}}},
      {"metrics", {{"window_size", 10}, {"top_n", 10}, {"rbo_p", 0.9}, {"rbo_depth", 10}, {"epsilon", 1e-10}}},
      {"hpo",
       {{"mode", "soo"},
        {"objective", "coherence"},
        {"objectives", {"coherence", "diversity", "perplexity"}},
        {"space", nullptr},
        {"top_k", 5},
        {"gamma", 0.25},
        {"n_candidates", 24},
        {"n_startup", 10},
        {"n_trials", 100}}},
      {"report", {{"top_n", 10}, {"time_bin", "year"}}},
  };
}

void apply_override(json& config, std::string_view dotted_path, std::string_view value) {
  const auto parts = split_dotted(dotted_path);
  json* node = &config;
  std::string path;
  for (const auto& part : parts) {
    path += (path.empty() ? "" : ".") + part;
    if (part.empty() || !node->is_object() || !node->contains(part)) bad_field(path, "unknown field");
    node = &(*node)[part];
  }
  if (node->is_object()) bad_field(path, "is a section, not a field");
  json parsed = json::parse(value.begin(), value.end(), nullptr, false);
  *node = parsed.is_discarded() ? json(std::string(value)) : parsed;
}

ExperimentConfig parse_config(const json& user) {
  json j = default_config_json();
  merge_into(j, user, "");

  ExperimentConfig c;
  c.resolved = j;
  const json& seed = j["seed"];
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
    bad_field("seed", "expected a non-negative integer");
  c.seed = seed.get<std::uint64_t>();
  c.output = text(j, "config", "output");
  c.model = model_kind_from_string(text(j, "config", "model"));

  const json& d = j["data"];
  c.data.path = text(d, "data", "path");
  try {
    c.data.source = source_from_string(text(d, "data", "source"));
  } catch (const std::exception& e) {
    bad_field("data.source", e.what());
  }
  if (auto s = optional_text(d, "data", "stopwords")) c.data.stopwords = fs::path(*s);
  c.data.keywords = optional_text(d, "data", "keywords");
  c.data.preprocess.min_tokens = count(d, "data", "min_tokens", 0);
  c.data.preprocess.max_tokens = count(d, "data", "max_tokens", 1);

  const json& l = j["lda"];
  c.lda.n_topics = count(l, "lda", "n_topics", 1);
  c.lda.alpha = positive(l, "lda", "alpha");
  c.lda.eta = positive(l, "lda", "eta");
  c.lda.n_iterations = count(l, "lda", "n_iterations", 1);
  c.lda.burn_in = count(l, "lda", "burn_in", 0);
  c.lda.sample_lag = count(l, "lda", "sample_lag", 1);
  if (c.lda.burn_in >= c.lda.n_iterations) bad_field("lda.burn_in", "must be below lda.n_iterations");
  c.lda.seed = c.seed;
  c.lda_n_gram = ngram_order(l, "lda");

  const json& x = j["corex"];
  c.corex.n_hidden = count(x, "corex", "n_hidden", 1);
  c.corex.anchor_strength = positive(x, "corex", "anchor_strength");
  if (c.corex.anchor_strength < 1.0) bad_field("corex.anchor_strength", "must be at least 1");
  c.corex.max_iter = count(x, "corex", "max_iter", 1);
  c.corex.tol = positive(x, "corex", "tol");
  c.corex.seed = c.seed;
  c.corex_n_gram = ngram_order(x, "corex");
  const json& anchors = x["anchors"];
  if (!anchors.is_array()) bad_field("corex.anchors", "expected an array");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const std::string p = "corex.anchors[" + std::to_string(i) + "]";
    const json& a = anchors[i];
    if (!a.is_object()) bad_field(p, "expected {terms, factor}");
    Anchor anchor;
    const json& terms = field(a, p, "terms");
    if (!terms.is_array() || terms.empty()) bad_field(p + ".terms", "expected a non-empty array of strings");
    for (const auto& t : terms) {
      if (!t.is_string()) bad_field(p + ".terms", "expected a non-empty array of strings");
      anchor.terms.push_back(t.get<std::string>());
    }
    anchor.factor = count(a, p, "factor", 0);
    if (anchor.factor >= c.corex.n_hidden) bad_field(p + ".factor", "must be below corex.n_hidden");
    c.corex.anchors.push_back(std::move(anchor));
  }

  const json& k = j["cluster"];
  if (auto e = optional_text(k, "cluster", "embeddings")) c.cluster.embeddings = fs::path(*e);
  c.cluster.embedding_dim = count(k, "cluster", "embedding_dim", 1);
  ClusterConfig& cc = c.cluster.cluster;
  cc.n_gram = ngram_order(k, "cluster");
  cc.kmeans.n_clusters = count(k, "cluster", "n_clusters", 1);
  cc.kmeans.n_init = count(k, "cluster", "n_init", 1);
  cc.kmeans.max_iter = count(k, "cluster", "max_iter", 1);
  cc.umap.n_components = count(k, "cluster", "n_components", 2);
  cc.umap.n_neighbors = count(k, "cluster", "n_neighbors", 2);
  cc.umap.min_dist = number(k, "cluster", "min_dist");
  if (cc.umap.min_dist < 0.0) bad_field("cluster.min_dist", "must be non-negative");
  cc.umap.spread = positive(k, "cluster", "spread");
  cc.umap.n_epochs = count(k, "cluster", "n_epochs", 1);
  cc.umap.negative_sample_rate = count(k, "cluster", "negative_sample_rate", 0);
  cc.umap.learning_rate = positive(k, "cluster", "learning_rate");
  cc.temperature = positive(k, "cluster", "temperature");
  cc.umap.seed = c.seed;
  cc.kmeans.seed = c.seed;

  const json& m = j["metrics"];
  c.metrics.window_size = count(m, "metrics", "window_size", 2);
  c.metrics.top_n = count(m, "metrics", "top_n", 2);
  c.metrics.diversity.p = positive(m, "metrics", "rbo_p");
  if (c.metrics.diversity.p >= 1.0) bad_field("metrics.rbo_p", "must be in (0, 1)");
  c.metrics.diversity.depth = count(m, "metrics", "rbo_depth", 1);
  c.metrics.perplexity.epsilon = positive(m, "metrics", "epsilon");

  const json& h = j["hpo"];
  c.hpo.mode = text(h, "hpo", "mode");
  if (c.hpo.mode != "soo" && c.hpo.mode != "moo") bad_field("hpo.mode", "expected soo or moo");
  try {
    c.hpo.objective = objective_from_name(text(h, "hpo", "objective"));
  } catch (const ConfigError& e) {
    bad_field("hpo.objective", e.what());
  }
  const json& objs = h["objectives"];
  if (!objs.is_array() || objs.empty()) bad_field("hpo.objectives", "expected a non-empty array of names");
  c.hpo.objectives.clear();
  for (const auto& o : objs) {
    if (!o.is_string()) bad_field("hpo.objectives", "expected a non-empty array of names");
    try {
      c.hpo.objectives.push_back(objective_from_name(o.get<std::string>()));
    } catch (const ConfigError& e) {
      bad_field("hpo.objectives", e.what());
    }
  }
  if (c.model == ModelKind::corex) {
    if (c.hpo.objective.name == "perplexity") bad_field("hpo.objective", "perplexity is not available for corex");
    for (const auto& o : c.hpo.objectives)
      if (o.name == "perplexity") bad_field("hpo.objectives", "perplexity is not available for corex");
  }
  if (!h["space"].is_null()) {
    c.hpo.space = parse_space(h["space"]);
    const auto allowed = allowed_params(c.model);
    for (std::size_t i = 0; i < c.hpo.space->domains.size(); ++i) {
      const auto& dom = c.hpo.space->domains[i];
      if (std::find(allowed.begin(), allowed.end(), dom.name) == allowed.end())
        bad_field("hpo.space[" + std::to_string(i) + "].name",
                  "'" + dom.name + "' is not a hyperparameter of the " + std::string(to_string(c.model)) + " model");
    }
  }
  c.hpo.top_k = count(h, "hpo", "top_k", 1);
  c.hpo.tpe.gamma = positive(h, "hpo", "gamma");
  c.hpo.tpe.n_candidates = count(h, "hpo", "n_candidates", 1);
  c.hpo.tpe.n_startup = count(h, "hpo", "n_startup", 0);
  c.hpo.tpe.n_trials = count(h, "hpo", "n_trials", 1);
  c.hpo.tpe.seed = c.seed;
  try {
    c.hpo.tpe.validate();
  } catch (const ConfigError& e) {
    bad_field("hpo", e.what());
  }

  const json& r = j["report"];
  c.report.top_n = count(r, "report", "top_n", 1);
  try {
    c.report.time_bin = time_bin_from_string(text(r, "report", "time_bin"));
  } catch (const ConfigError& e) {
    bad_field("report.time_bin", e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::optional<fs::path>& path,
                             const std::vector<std::pair<std::string, std::string>>& overrides) {
  json merged = default_config_json();
  if (path) {
    if (!fs::exists(*path)) throw ConfigError("config file not found: " + path->string());
    const std::string body = read_file(*path);
    json user = json::parse(body, nullptr, false);
    if (user.is_discarded()) throw ConfigError("config file " + path->string() + " is not valid JSON");
    merge_into(merged, user, "");
  }
  for (const auto& [key, value] : overrides) apply_override(merged, key, value);
  return parse_config(merged);
}

// ---------------------------------------------------------------------------
// commands

void cmd_ingest(const ExperimentConfig& config) {
  run_stage(config, "ingest", [&](Stage& stage) {
    const std::string raw = stage.external(config.data.path, "data.path");
    stage.begin();
    const IngestResult r = ingest_text(raw, config.data.source);
    json errors = json::array();
    for (const auto& e : r.errors) errors.push_back({{"index", e.index}, {"message", e.message}});
    stage.write("records.ndjson", records_to_ndjson(r.records));
    stage.write("ingest_errors.json", dump(errors));
    if (!r.errors.empty()) stage.warn_all({std::to_string(r.errors.size()) + " records skipped"});
  });
}

void cmd_preprocess(const ExperimentConfig& config) {
  run_stage(config, "preprocess", [&](Stage& stage) {
    const auto records = records_from_ndjson(stage.artifact("records.ndjson", "ingest"));
    std::unordered_set<std::string> stopwords = default_stopwords();
    if (config.data.stopwords) {
      const auto list = parse_list_file(stage.external(*config.data.stopwords, "data.stopwords"));
      stopwords = {list.begin(), list.end()};
    }
    std::optional<KeywordFilter> filter;
    if (config.data.keywords) {
      if (*config.data.keywords == "circular_economy")
        filter = KeywordFilter::circular_economy();
      else
        filter = KeywordFilter(parse_list_file(stage.external(*config.data.keywords, "data.keywords")));
    }
    stage.begin();
    Corpus corpus = preprocess(records, stopwords, config.data.preprocess);
    if (filter) corpus = filter_by_keywords(corpus, *filter);
    if (corpus.empty()) stage.warn_all({"preprocessing left no documents"});
    stage.write("corpus.ndjson", corpus_to_ndjson(corpus));
  });
}

void cmd_train(const ExperimentConfig& config) {
  run_stage(config, "train", [&](Stage& stage) {
    const Corpus corpus = load_corpus(stage);
    if (corpus.empty()) throw DataError("the corpus is empty; nothing to train on");
    stage.begin();
    Fitted f;
    switch (config.model) {
      case ModelKind::lda: f = fit_lda(corpus, config.lda, config.lda_n_gram, config.metrics.top_n); break;
      case ModelKind::corex: f = fit_corex(corpus, config.corex, config.corex_n_gram, config.metrics.top_n); break;
      case ModelKind::cluster: {
        Warnings w;
        const EmbeddingMatrix emb = embeddings_for(config, corpus, &w);
        f = fit_cluster(corpus, emb, config.cluster.cluster, config.metrics.top_n);
        f.warnings.insert(f.warnings.begin(), w.begin(), w.end());
        break;
      }
    }
    f.model["n_gram"] = f.n_gram;
    stage.write("model.json", dump(f.model));
    stage.write("topics.json", topic_set_json(f.topics));
    stage.write("doc_topic.csv", doc_topic_csv(f.doc_topic));
    if (f.reduced) stage.write("reduced.csv", embeddings_to_csv(*f.reduced));
    stage.warn_all(f.warnings);
  });
}

namespace {

/// What evaluate and report need back from model.json.
struct StoredModel {
  ModelKind kind = ModelKind::cluster;
  Vocabulary vocab;
  int n_gram = 1;
  Matrix weights;
  std::optional<Matrix> topic_word;
  std::vector<std::size_t> assignments;  // cluster model only
};

StoredModel read_model(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("model")) throw DataError("model.json is not a model file");
  StoredModel s;
  try {
    s.kind = model_kind_from_string(j.at("model").get<std::string>());
    s.vocab = Vocabulary(j.at("vocab").get<std::vector<std::string>>());
    s.n_gram = j.at("n_gram").get<int>();
    switch (s.kind) {
      case ModelKind::lda:
        s.weights = matrix_from_json(j.at("phi"), "phi");
        s.topic_word = s.weights;
        break;
      case ModelKind::corex: s.weights = matrix_from_json(j.at("word_factor_mi"), "word_factor_mi"); break;
      case ModelKind::cluster: {
        CTfIdfModel m;
        m.weights = matrix_from_json(j.at("ctfidf"), "ctfidf");
        s.weights = m.weights;
        s.topic_word = cluster_topic_word(m);
        s.assignments = j.at("assignments").get<std::vector<std::size_t>>();
        break;
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("model.json: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model.json: ") + e.what());
  }
  return s;
}

}  // namespace

void cmd_evaluate(const ExperimentConfig& config) {
  run_stage(config, "evaluate", [&](Stage& stage) {
    const Corpus corpus = load_corpus(stage);
    const TopicSet topics = topic_set_from_json(stage.artifact("topics.json", "train"));
    std::optional<StoredModel> model;
    Matrix doc_topic;
    if (stage.has_artifact("model.json")) {
      model = read_model(stage.artifact("model.json", "train"));
      doc_topic = parse_embeddings_csv(stage.artifact("doc_topic.csv", "train"));
    }
    stage.begin();
    MetricReport report;
    if (model && model->topic_word) {
      const DocTermMatrix counts = count_matrix(corpus, model->vocab, model->n_gram);
      report = evaluate_topics(topics, corpus, config.metrics, &doc_topic, &*model->topic_word, &counts);
    } else {
      report = evaluate_topics(topics, corpus, config.metrics);
      report.warnings.push_back(model ? "perplexity is not defined for the " + std::string(to_string(model->kind)) + " model"
                                      : "no model.json; perplexity not computed");
    }
    stage.write("metrics.json", metric_report_json(report));
    stage.warn_all(report.warnings);
  });
}

Evaluator make_evaluator(const ExperimentConfig& config, const Corpus& corpus, const std::vector<Objective>& objectives) {
  for (const auto& o : objectives)
    if (config.model == ModelKind::corex && o.name == "perplexity")
      throw ConfigError("hpo.objectives: perplexity is not available for corex");
  const std::size_t top_n = config.metrics.top_n;
  switch (config.model) {
    case ModelKind::lda:
      return [&config, &corpus, objectives, top_n](const ParamMap& p, std::uint64_t seed) {
        int n_gram = 1;
        const LDAConfig cfg = lda_with(config, p, seed, n_gram);
        check_ngram(n_gram);
        return objective_values(score(fit_lda(corpus, cfg, n_gram, top_n), corpus, config.metrics), objectives);
      };
    case ModelKind::corex:
      return [&config, &corpus, objectives, top_n](const ParamMap& p, std::uint64_t seed) {
        int n_gram = 1;
        const CorExConfig cfg = corex_with(config, p, seed, n_gram);
        check_ngram(n_gram);
        return objective_values(score(fit_corex(corpus, cfg, n_gram, top_n), corpus, config.metrics), objectives);
      };
    case ModelKind::cluster: {
      auto emb = std::make_shared<EmbeddingMatrix>(embeddings_for(config, corpus, nullptr));
      return [&config, &corpus, objectives, top_n, emb](const ParamMap& p, std::uint64_t seed) {
        const ClusterConfig cfg = cluster_with(config, p, seed);
        check_ngram(cfg.n_gram);
        return objective_values(score(fit_cluster(corpus, *emb, cfg, top_n), corpus, config.metrics), objectives);
      };
    }
  }
  throw ConfigError("model: unsupported");
}

void cmd_hpo(const ExperimentConfig& config, std::size_t jobs) {
  run_stage(config, "hpo", [&](Stage& stage) {
    const Corpus corpus = load_corpus(stage);
    if (corpus.empty()) throw DataError("the corpus is empty; nothing to tune on");
    const SearchSpace space = config.hpo.space ? *config.hpo.space : default_space(config.model, config.hpo.mode);
    stage.begin();
    if (config.hpo.mode == "soo") {
      const Evaluator eval = make_evaluator(config, corpus, {config.hpo.objective});
      const SooResult r = run_soo(space, eval, config.hpo.objective, config.seed, jobs);
      stage.write("trials.ndjson", trials_to_ndjson(r.trials), true);
      json result = json::parse(soo_to_json(r, config.hpo.objective, config.hpo.top_k));
      result["mode"] = "soo";
      result["model"] = to_string(config.model);
      result["space"] = space_json(space);
      stage.write("hpo_result.json", dump(result), true);
      if (!r.best) stage.warn_all({"every trial failed"});
    } else {
      const Evaluator eval = make_evaluator(config, corpus, config.hpo.objectives);
      const MooResult r = run_moo(space, eval, config.hpo.objectives, config.hpo.tpe);
      stage.write("trials.ndjson", trials_to_ndjson(r.trials), true);
      json result = json::parse(pareto_to_json(r.pareto, config.hpo.objectives));
      result["mode"] = "moo";
      result["model"] = to_string(config.model);
      result["space"] = space_json(space);
      stage.write("hpo_result.json", dump(result), true);
      stage.warn_all(r.pareto.warnings);
    }
  });
}

void cmd_report(const ExperimentConfig& config) {
  run_stage(config, "report", [&](Stage& stage) {
    const Corpus corpus = load_corpus(stage);
    const TopicSet topics = topic_set_from_json(stage.artifact("topics.json", "train"));
    const StoredModel model = read_model(stage.artifact("model.json", "train"));
    const Matrix doc_topic = parse_embeddings_csv(stage.artifact("doc_topic.csv", "train"));
    std::optional<Matrix> reduced;
    if (model.kind == ModelKind::cluster) reduced = parse_embeddings_csv(stage.artifact("reduced.csv", "train"));
    stage.begin();

    Warnings warnings;
    const std::size_t n = config.report.top_n;
    stage.write("report/topic_table.csv", topic_table_csv(topics, n));
    stage.write("report/topics_over_time.csv", time_series_csv(topics_over_time(corpus, doc_topic, config.report.time_bin)));
    if (topics.scores.size() == topics.size()) {
      stage.write("report/word_scores.csv", word_score_bars_csv(word_score_bars(topics, n)));
      try {
        stage.write("report/wordcloud.csv", wordcloud_csv(wordcloud_weights(topics)));
      } catch (const DataError& e) {
        warnings.push_back(std::string("word cloud skipped: ") + e.what());
      }
    } else {
      warnings.push_back("topics carry no scores; word score bars and word cloud skipped");
    }
    try {
      stage.write("report/similarity.csv", similarity_csv(topic_similarity(model.weights)));
    } catch (const DataError& e) {
      warnings.push_back(std::string("similarity matrix skipped: ") + e.what());
    }
    if (reduced) {
      Matrix coords = *reduced;
      if (coords.cols() != 2) {
        UMAPConfig u = config.cluster.cluster.umap;
        u.n_components = 2;
        Warnings w;
        coords = umap_reduce(embeddings_for(config, corpus, &w).values, u);
        warnings.push_back("reduced coordinates are " + std::to_string(reduced->cols()) +
                           "-D; scatter uses a separate 2-D reduction");
      }
      stage.write("report/doc_scatter.csv", doc_scatter_csv(doc_scatter(coords, model.assignments)));
    } else {
      warnings.push_back("document scatter needs reduced coordinates; only the cluster model has them");
    }
    stage.write("report/warnings.json", dump(json(warnings)));
    stage.warn_all(warnings);
  });
}

void cmd_synth(const SynthOptions& options, const fs::path& path) {
  const SynthCorpus s = synth_corpus(options);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, synth_guardian_json(s));
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error) != nullptr) return 2;
  if (dynamic_cast<const DataError*>(&error) != nullptr) return 3;
  return 4;
}

}  // namespace topicopt
